//! Interpolated n-gram language models in both directions: conditional
//! probabilities, next-word distributions, and sentence fluency.
//!
//! ```text
//! cargo run -p parasearch --example language_model
//! ```

use std::path::PathBuf;

use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::lm::{train_lm, Direction, LmConfig};
use parasearch::{Result, TokenSeq};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(name)
}

fn main() -> Result<()> {
    let sentences = load_corpus(fixture("corpus.txt"))?;
    let vocab = build_vocab(&sentences, 1)?;
    let toks: Vec<TokenSeq> = sentences.iter().map(|s| vocab.intern(s)).collect();
    let cfg = LmConfig::default();
    println!(
        "training order-{} models on {} sentences, add-{} smoothing",
        cfg.order,
        toks.len(),
        cfg.add_k
    );
    let fwd = train_lm(&toks, &vocab, cfg.clone(), Direction::Forward)?;
    let bwd = train_lm(&toks, &vocab, cfg, Direction::Backward)?;
    println!();

    let ctx = vocab.intern(&["the".to_owned(), "best".to_owned()]);
    let mut dist = fwd.distribution(ctx.as_slice(), &vocab);
    dist.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("most likely words after \"the best\":");
    for (id, p) in dist.iter().take(5) {
        println!("  {:<10} {p:.4}", vocab.surface(*id));
    }
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    println!("  (full distribution sums to {total:.12})");
    println!();

    let fluent = vocab.encode_line("what is the best way to learn german")?;
    let scrambled = vocab.encode_line("german way the learn to is best what")?;
    println!(
        "forward log-probability, fluent vs scrambled:  {:.3} vs {:.3}",
        fwd.log_prob(&fluent),
        fwd.log_prob(&scrambled)
    );
    // The backward model is trained on reversed sentences, so callers
    // hand it reversed input; it judges how well each word is predicted
    // by what follows it.
    println!(
        "backward log-probability of the same pair:     {:.3} vs {:.3}",
        bwd.log_prob(&fluent.reversed()),
        bwd.log_prob(&scrambled.reversed())
    );
    println!(
        "fluency (plain probability) of the fluent sentence: {:.3e}",
        fwd.fluency(&fluent)
    );
    Ok(())
}
