//! Searching with a learned surrogate blended into acceptance: the
//! mixture weight moves the search from fully heuristic to fully
//! learned.
//!
//! ```text
//! cargo run --release -p parasearch --example guided_search
//! ```

use std::path::PathBuf;

use parasearch::annealing::{search, search_batch, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::{combine_value, BaseObjective};
use parasearch::semantics::{load_embeddings, load_stopwords};
use parasearch::surrogate::{train_regressor, RegressorObjective, TrainHyper};
use parasearch::trajectory::{label_value_all, Trajectory};
use parasearch::{ModelSet, ObjectiveConfig, Result, TokenSeq};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(name)
}

fn build_models() -> Result<ModelSet> {
    let sentences = load_corpus(fixture("corpus.txt"))?;
    let vocab = build_vocab(&sentences, 1)?;
    let toks: Vec<TokenSeq> = sentences.iter().map(|s| vocab.intern(s)).collect();
    let lm_fwd = train_lm(&toks, &vocab, LmConfig::default(), Direction::Forward)?;
    let lm_bwd = train_lm(&toks, &vocab, LmConfig::default(), Direction::Backward)?;
    let embeddings = load_embeddings(fixture("embeddings.txt"))?;
    let stopwords = load_stopwords(fixture("stopwords.txt"))?;
    ModelSet::new(vocab, lm_fwd, lm_bwd, &embeddings, stopwords)
}

fn main() -> Result<()> {
    let models = build_models()?;
    let base = BaseObjective::new(
        &models,
        ObjectiveConfig {
            score_scale: 1e10,
            ..ObjectiveConfig::default()
        },
    )?;
    let sa = SaConfig::default();

    let sentences = load_corpus(fixture("corpus.txt"))?;
    let train_inputs: Vec<TokenSeq> = sentences
        .iter()
        .take(60)
        .map(|s| models.vocab.intern(s))
        .collect();
    println!("collecting {} baseline searches for training data", train_inputs.len());
    let results = search_batch(&train_inputs, &base, &base, &sa, 0)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    let examples = label_value_all(&trajs)?;
    let (reg, report) = train_regressor(&examples, &models, &TrainHyper::default())?;
    println!(
        "value regressor trained on {} states (final mse {:.1})",
        examples.len(),
        report.final_mse
    );
    println!();

    let learned = RegressorObjective::new(&models, reg);
    let x0 = models.vocab.encode_line("What is the best way to learn german?")?;
    println!("source: {:?}", models.vocab.decode(&x0));
    println!();

    let unguided = search(&x0, &base, &base, &sa)?;
    for k in [0.0, 0.5, 1.0] {
        // Proposals still come from the base objective; only the
        // accept/reject test sees the blend.
        let blended = combine_value(base, &learned, k)?;
        let r = search(&x0, &blended, &base, &sa)?;
        let accepted = r.trajectory.accepted_steps().count() - 1;
        println!(
            "k={k:<4} accepted {accepted:>3}  best {:?} (blend score {:.4})",
            models.vocab.decode(&r.output),
            r.output_score
        );
        if k == 0.0 {
            assert_eq!(r.trajectory, unguided.trajectory);
            println!("       (zero weight replays the unguided search exactly)");
        }
    }
    Ok(())
}
