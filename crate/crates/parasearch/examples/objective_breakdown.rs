//! The composite search objective, factor by factor: fluency, keyword
//! similarity, sentence similarity, and lexical diversity.
//!
//! ```text
//! cargo run -p parasearch --example objective_breakdown
//! ```

use std::path::PathBuf;

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
    // Raw sentence probabilities on a corpus this small sit near 1e-10;
    // the multiplier lifts scores into a range where differences matter.
    let cfg = ObjectiveConfig {
        score_scale: 1e10,
        ..ObjectiveConfig::default()
    };
    let base = BaseObjective::new(&models, cfg)?;

    let x0 = models.vocab.encode_line("What is the best way to learn german?")?;
    let prepared = base.prepare_base(&x0)?;
    println!("source: {:?}", models.vocab.decode(&x0));
    println!(
        "score = {} * flu * key^{} * sen^{} * lex  (lex carries its own power {})",
        cfg.score_scale, cfg.p, cfg.q, cfg.s
    );
    println!();

    let candidates = [
        "what is the best way to learn german",
        "what is the best way to study german",
        "what is the fastest method to learn german",
        "what is the best way",
        "how much time should i spend on cycling",
    ];
    println!(
        "{:<42} {:>9} {:>7} {:>7} {:>7} {:>10}",
        "candidate", "flu", "key", "sen", "lex", "total"
    );
    for c in candidates {
        let x = models.vocab.encode_line(c)?;
        let b = prepared.breakdown(&x)?;
        println!(
            "{c:<42} {:>9.2e} {:>7.4} {:>7.4} {:>7.4} {:>10.4}",
            b.flu, b.sem_key, b.sem_sen, b.lex, b.total
        );
    }
    println!();
    println!("the unchanged source bottoms out on diversity, the truncated");
    println!("candidate loses its dropped keywords, and the unrelated sentence");
    println!("loses both similarities at once.");
    Ok(())
}
