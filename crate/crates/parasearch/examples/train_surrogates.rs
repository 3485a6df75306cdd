//! Labeling recorded searches three ways and fitting all three surrogate
//! models: value regressor, max-value regressor, and the copy/bigram
//! emission model.
//!
//! ```text
//! cargo run --release -p parasearch --example train_surrogates
//! ```

use std::path::PathBuf;

use parasearch::annealing::{search_batch, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::BaseObjective;
use parasearch::semantics::{load_embeddings, load_stopwords};
use parasearch::surrogate::{
    train_regressor, train_s2s, EmissionHyper, TrainHyper,
};
use parasearch::trajectory::{
    extract_pseudo_pairs, label_max_value_all, label_value_all, Trajectory,
};
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
    let sentences = load_corpus(fixture("corpus.txt"))?;
    let inputs: Vec<TokenSeq> = sentences
        .iter()
        .take(60)
        .map(|s| models.vocab.intern(s))
        .collect();
    let results = search_batch(&inputs, &base, &base, &SaConfig::default(), 0)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    println!("collected {} trajectories to learn from", trajs.len());
    println!();

    let value = label_value_all(&trajs)?;
    let max_value = label_max_value_all(&trajs)?;
    println!(
        "value labels: {} accepted states, each targeting its own score",
        value.len()
    );
    println!(
        "max-value labels: same states targeting the best score still ahead;"
    );
    let climbing = value
        .iter()
        .zip(&max_value)
        .filter(|(v, m)| m.target > v.target)
        .count();
    println!(
        "  the two targets differ on {climbing} of {} states (the climb ahead)",
        value.len()
    );
    println!();

    let hyper = TrainHyper::default();
    let (_reg, report) = train_regressor(&value, &models, &hyper)?;
    println!(
        "value regressor: {} epochs, mse {:.1} -> {:.1}",
        hyper.epochs, report.epoch_mse[0], report.final_mse
    );
    let (_reg, report) = train_regressor(&max_value, &models, &hyper)?;
    println!(
        "max-value regressor: {} epochs, mse {:.1} -> {:.1}",
        hyper.epochs, report.epoch_mse[0], report.final_mse
    );
    println!();

    let pairs = extract_pseudo_pairs(&trajs)?;
    println!(
        "emission model: {} pseudo pairs (source -> final accepted state)",
        pairs.len()
    );
    let (model, report) = train_s2s(&pairs, &models.vocab, &EmissionHyper::default())?;
    let [copy, bigram, unigram] = model.lambda();
    println!(
        "  EM cross-entropy {:.1} -> {:.1} over {} iterations",
        report.iter_ce[0],
        report.final_ce,
        report.iter_ce.len()
    );
    println!(
        "  mixture weights: copy {copy:.4}, bigram {bigram:.4}, unigram {unigram:.2e}"
    );
    println!("  (near-copies of fluent sentences: copy and bigram do the work)");
    Ok(())
}
