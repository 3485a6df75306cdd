//! One annealed search, step by step: proposals, acceptance, the cooling
//! temperature, and the best state found.
//!
//! ```text
//! cargo run -p parasearch --example annealing_run
//! ```

use std::path::PathBuf;

use parasearch::annealing::{search, temperature, SaConfig};
use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::objective::BaseObjective;
use parasearch::semantics::{load_embeddings, load_stopwords};
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
    let sa = SaConfig {
        seed: 7,
        ..SaConfig::default()
    };
    println!(
        "annealing for {} steps, temperature {} cooling to {} (seed {})",
        sa.steps,
        temperature(0, &sa),
        temperature(sa.steps, &sa),
        sa.seed
    );
    println!();

    let x0 = models.vocab.encode_line("What is the best way to learn german?")?;
    let result = search(&x0, &base, &base, &sa)?;

    println!("accepted states:");
    println!("{:>5} {:>8} {:>7} {:>10}  state", "step", "op", "temp", "score");
    for s in result.trajectory.steps.iter().filter(|s| s.accepted) {
        println!(
            "{:>5} {:>8} {:>7.4} {:>10.4}  {}",
            s.step,
            s.op.to_string(),
            temperature(s.step, &sa),
            s.score,
            models.vocab.decode(&s.state)
        );
    }
    println!();

    let accepted = result.trajectory.steps.iter().filter(|s| s.accepted).count() - 1;
    println!(
        "{} of {} proposals accepted (early ones freely, late ones only uphill)",
        accepted, sa.steps
    );
    println!(
        "final state: {:?} (score {:.4})",
        models.vocab.decode(&result.final_state),
        result.final_score
    );
    println!(
        "best state:  {:?} (score {:.4})",
        models.vocab.decode(&result.output),
        result.output_score
    );

    let rerun = search(&x0, &base, &base, &sa)?;
    assert_eq!(rerun.trajectory, result.trajectory);
    println!();
    println!("a rerun with the same seed replays the identical trajectory.");
    Ok(())
}
