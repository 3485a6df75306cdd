//! Keyword extraction and embedding-based similarity: the semantic half
//! of the search objective.
//!
//! ```text
//! cargo run -p parasearch --example keywords_and_similarity
//! ```

use std::path::PathBuf;

use parasearch::corpus::{build_vocab, load_corpus};
use parasearch::semantics::{
    cosine, extract_keywords, load_embeddings, load_stopwords, SemanticScorer,
};
use parasearch::Result;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(name)
}

fn main() -> Result<()> {
    let sentences = load_corpus(fixture("corpus.txt"))?;
    let vocab = build_vocab(&sentences, 1)?;
    let embeddings = load_embeddings(fixture("embeddings.txt"))?;
    let stopwords = load_stopwords(fixture("stopwords.txt"))?;
    println!(
        "{} embeddings of dimension {}, {} stopwords",
        embeddings.len(),
        embeddings.dim(),
        stopwords.len()
    );
    println!();

    // The bundled vectors are synthetic, so unrelated words sit near
    // zero and only identical words score high; similarity is driven by
    // shared vocabulary, which is all these small demos need.
    let learn = embeddings.get("learn").expect("fixture word");
    let improve = embeddings.get("improve").expect("fixture word");
    println!("cosine(learn, learn)   = {:.4}", cosine(learn, learn)?);
    println!("cosine(learn, improve) = {:.4}", cosine(learn, improve)?);
    println!();

    let x0 = vocab.encode_line("What is the best way to learn german?")?;
    let keywords = extract_keywords(&x0, &stopwords, &vocab);
    println!("source:   {:?}", vocab.decode(&x0));
    println!(
        "keywords: {:?} (stopwords and duplicates dropped)",
        keywords.surfaces(&vocab)
    );
    println!();

    let scorer = SemanticScorer::new(&embeddings, &vocab);
    let candidates = [
        "the best way to learn german",
        "what is the best method to learn german",
        "how much time should i spend on cycling",
    ];
    println!("{:<42} {:>8} {:>9}", "candidate", "keyword", "sentence");
    for c in candidates {
        let x = vocab.encode_line(c)?;
        let (key, skipped) = scorer.keyword_sim(&x, &keywords, 1e-4);
        let sen = scorer.sentence_sim(&x, &x0)?;
        println!("{c:<42} {key:>8.4} {sen:>9.4}  (skipped {skipped})");
    }
    println!();
    println!("keyword similarity is the weakest keyword's best match: keeping all");
    println!("four keywords scores 1, losing \"way\" alone drags the whole score");
    println!("down, and the unrelated sentence loses every keyword at once.");
    Ok(())
}
