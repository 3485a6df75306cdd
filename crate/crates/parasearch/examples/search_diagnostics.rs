//! Diagnosing recorded searches: does the objective's ranking agree with
//! BLEU, how often are proposals accepted, and how often does the search
//! climb out of a local minimum?
//!
//! ```text
//! cargo run --release -p parasearch --example search_diagnostics
//! ```

use std::path::PathBuf;

use parasearch::analysis::{
    acceptance_ratio, count_escapes, current_score_path, find_local_minima, reevaluate, spearman,
};
use parasearch::annealing::{search_batch, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::BaseObjective;
use parasearch::semantics::{load_embeddings, load_stopwords};
use parasearch::trajectory::Trajectory;
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
    let inputs = load_lines("eval_inputs.txt", &models, 20)?;
    let refs = load_lines("eval_refs.txt", &models, 20)?;
    println!("searching {} sentences with the heuristic objective", inputs.len());
    let results = search_batch(&inputs, &base, &base, &SaConfig::default(), 0)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    println!();

    // Per accepted state: the objective's score next to BLEU against the
    // reference. Spearman asks whether the two rank states the same way.
    let states = reevaluate(&trajs, &base, &refs, 0.9)?;
    let scores: Vec<f64> = states.iter().map(|s| s.score).collect();
    let bleus: Vec<f64> = states.iter().map(|s| s.bleu).collect();
    let ibleus: Vec<f64> = states.iter().map(|s| s.ibleu).collect();
    println!("over {} accepted states:", states.len());
    println!(
        "  spearman(objective, bleu)  = {:+.4}",
        spearman(&scores, &bleus)?
    );
    println!(
        "  spearman(objective, ibleu) = {:+.4}",
        spearman(&scores, &ibleus)?
    );
    println!();

    println!(
        "acceptance: {:.1} proposals per 100 steps",
        acceptance_ratio(&trajs)?
    );
    println!();

    println!("escapes from local minima of the held-score path:");
    println!("{:>5} {:>8} {:>8} {:>8}", "traj", "minima", "escapes", "per100");
    let mut total = 0usize;
    for t in trajs.iter().take(8) {
        let path = current_score_path(t, &base)?;
        let minima = find_local_minima(&path).len();
        let e = count_escapes(&path);
        total += e.escapes;
        println!(
            "{:>5} {:>8} {:>8} {:>8.2}",
            t.id, minima, e.escapes, e.per_hundred
        );
    }
    println!("  ... ({total} escapes in the first 8 trajectories)");
    Ok(())
}
