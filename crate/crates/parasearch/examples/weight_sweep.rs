//! Sweeping the surrogate mixture weight: the same seeded searches rerun
//! under each blend, reported as quality, correlation, and search-shape
//! columns.
//!
//! ```text
//! cargo run --release -p parasearch --example weight_sweep
//! ```

use std::path::PathBuf;

use parasearch::analysis::{weight_sweep, SweepConfig};
use parasearch::annealing::{search_batch, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::BaseObjective;
use parasearch::semantics::{load_embeddings, load_stopwords};
use parasearch::surrogate::{
    train_regressor, train_s2s, EmissionHyper, EmissionObjective, RegressorObjective,
    SurrogateKind, TrainHyper,
};
use parasearch::trajectory::{extract_pseudo_pairs, label_value_all, Trajectory};
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

fn load_lines(name: &str, models: &ModelSet, n: usize) -> Result<Vec<TokenSeq>> {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture file");
    text.lines()
        .take(n)
        .map(|l| models.vocab.encode_line(l))
        .collect()
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
    println!("training surrogates on {} baseline searches...", train_inputs.len());
    let results = search_batch(&train_inputs, &base, &base, &sa, 0)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    let (reg, _) = train_regressor(&label_value_all(&trajs)?, &models, &TrainHyper::default())?;
    let value = RegressorObjective::new(&models, reg);
    let (em, _) = train_s2s(&extract_pseudo_pairs(&trajs)?, &models.vocab, &EmissionHyper::default())?;
    let s2s = EmissionObjective::new(em);

    let inputs = load_lines("eval_inputs.txt", &models, 12)?;
    let refs = load_lines("eval_refs.txt", &models, 12)?;
    let cfg = SweepConfig {
        k_grid: vec![0.0, 0.5, 1.0],
        jobs: 0,
        ..SweepConfig::default()
    };
    println!(
        "sweeping {} weights over {} sentences per blend",
        cfg.k_grid.len(),
        inputs.len()
    );
    println!();

    let report = weight_sweep(&inputs, &refs, &base, &sa, &value, SurrogateKind::Value, &cfg)?;
    println!("value regressor blend:");
    print!("{}", report.to_csv());
    println!();

    let report = weight_sweep(&inputs, &refs, &base, &sa, &s2s, SurrogateKind::S2s, &cfg)?;
    println!("emission model blend:");
    print!("{}", report.to_csv());
    println!();
    println!("the k = 0 rows agree: both blends reduce to the plain objective.");
    Ok(())
}
