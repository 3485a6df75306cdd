//! Batch searches over the corpus, recorded as a trajectory file and
//! read back losslessly.
//!
//! ```text
//! cargo run -p parasearch --example collect_trajectories
//! ```

use std::path::PathBuf;

use parasearch::annealing::{search_batch, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::BaseObjective;
use parasearch::semantics::{load_embeddings, load_stopwords};
use parasearch::trajectory::{load_trajectories, save_trajectories, Trajectory};
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
    let inputs: Vec<TokenSeq> = sentences
        .iter()
        .take(30)
        .map(|s| models.vocab.intern(s))
        .collect();
    println!(
        "searching {} sentences, {} steps each, all cores",
        inputs.len(),
        sa.steps
    );
    let results = search_batch(&inputs, &base, &base, &sa, 0)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();

    let steps: usize = trajs.iter().map(|t| t.steps.len()).sum();
    let accepted: usize = trajs
        .iter()
        .map(|t| t.accepted_steps().count() - 1)
        .sum();
    println!(
        "recorded {} trajectories, {} steps, {} accepted proposals",
        trajs.len(),
        steps,
        accepted
    );

    let path = std::env::temp_dir().join("parasearch_collect_example.tsv");
    save_trajectories(&trajs, &path, &models.vocab)?;
    println!("saved to {}", path.display());

    let reloaded = load_trajectories(&path, &models.vocab)?;
    assert_eq!(reloaded, trajs);
    println!("reloaded file matches the in-memory record exactly, scores included");
    println!();

    println!("first steps of trajectory 0:");
    for s in &trajs[0].steps[..6.min(trajs[0].steps.len())] {
        println!(
            "  {}\t{}\t{}\t{:.6}\t{}",
            s.step,
            s.op,
            u8::from(s.accepted),
            s.score,
            models.vocab.decode(&s.state)
        );
    }
    Ok(())
}
