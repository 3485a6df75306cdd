//! Paraphrase generation as discrete search: a sentence is rewritten by
//! simulated annealing over word-level edits, guided by an objective that
//! trades off fluency, semantic preservation, and lexical novelty.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`] — normalization, tokenization, vocabulary interning
//! * [`lm`] — interpolated n-gram language models (forward and backward)
//! * [`semantics`] — word embeddings, keyword extraction, similarity scores
//! * [`metrics`] — sentence BLEU, iBLEU, lexical diversity
//! * [`objective`] — the combined search objective and its decomposition
//! * [`annealing`] — the simulated-annealing search engine
//! * [`trajectory`] — recorded search trajectories and their labelings
//! * [`surrogate`] — models trained on trajectories: value and max-value
//!   regressors, and a copy/bigram emission model for source-given-target
//!   probability
//! * [`analysis`] — rank correlation, acceptance ratio, escape counting,
//!   and objective-weight sweeps
//! * [`pipeline`] — file-level commands that chain the above, shared by the
//!   `parasearch` binary and the runnable examples
//!
//! Every randomized component takes an explicit seed and draws from a single
//! counter-based stream, so any search is reproducible bit-for-bit.
//!
//! The `examples/` directory is the best starting point; each example is a
//! self-contained run over the bundled `fixtures/` data, e.g.
//!
//! ```text
//! cargo run --release -p parasearch --example annealing_run
//! ```

pub mod analysis;
pub mod annealing;
pub mod corpus;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod objective;
pub mod pipeline;
pub mod semantics;
pub mod surrogate;
pub mod trajectory;

pub use corpus::{TokenId, TokenSeq, Vocabulary};
pub use error::{Error, Result};
pub use objective::{ModelSet, Objective, ObjectiveConfig, ScoreBreakdown};

