//! Normalization, vocabulary building, and the round trip between raw
//! text and token sequences.
//!
//! ```text
//! cargo run -p parasearch --example corpus_basics
//! ```

use std::path::PathBuf;

use parasearch::corpus::{build_vocab, load_corpus, tokenize, Vocabulary};
use parasearch::Result;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(name)
}

fn main() -> Result<()> {
    let raw = "How do I improve my English, quickly?";
    println!("raw line:   {raw:?}");
    println!("tokenized:  {:?}", tokenize(raw)?);
    println!();

    let sentences = load_corpus(fixture("corpus.txt"))?;
    println!(
        "corpus: {} sentences after normalization and dedup",
        sentences.len()
    );

    for min_count in [1, 2] {
        let vocab = build_vocab(&sentences, min_count)?;
        println!(
            "vocabulary at min_count {min_count}: {} entries ({} words + 3 specials)",
            vocab.len(),
            vocab.words().count()
        );
    }
    println!();

    let vocab = build_vocab(&sentences, 1)?;
    let seq = vocab.encode_line("What is the best way to learn german?")?;
    println!("encoded ids: {:?}", seq.as_slice());
    println!("decoded:     {:?}", vocab.decode(&seq));

    let unseen = vocab.encode_line("Completely unseen xylophone words!")?;
    println!(
        "unseen words decode through the unknown token: {:?}",
        vocab.decode(&unseen)
    );
    assert_eq!(unseen[1], Vocabulary::UNK);
    Ok(())
}
