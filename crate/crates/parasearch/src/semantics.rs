//! Word embeddings, keyword extraction, and the semantic preservation
//! scores.
//!
//! Keyword extraction follows the degree-over-frequency scheme: a sentence
//! splits into candidate phrases at stopwords, each word scores
//! `degree / frequency` over those phrases, a phrase scores the sum of its
//! word scores, and the words of the top `ceil(len / 3)` phrases (ties to
//! the earlier phrase) become the keyword list.
//!
//! Keyword similarity is the weakest link: the minimum over source keywords
//! of the best cosine match in the candidate sentence. Sentence similarity
//! is the cosine of unweighted mean word vectors. Words without embeddings
//! drop out of both; dropped keywords are counted so score diagnostics can
//! report them.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::corpus::{TokenId, TokenSeq, Vocabulary};
use crate::error::{Error, Result};

/// Embedding rows keyed by surface, all of one dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    rows: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Build from explicit rows; every row must have width `dim`.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, (word, row)) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            map.entry(word).or_insert(row);
        }
        Ok(EmbeddingTable { dim, rows: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.rows.get(word).map(Vec::as_slice)
    }
}

/// Read a `word v1 .. vD` table, one row per line, single-space separated.
/// The first line fixes the dimension; a duplicate word keeps its first row.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dim = None;
    let mut rows = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line has a first field");
        let values: Vec<f64> = parts
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Malformed {
                    path: path.to_owned(),
                    line: i + 1,
                    reason: format!("bad float {v:?}"),
                })
            })
            .collect::<Result<_>>()?;
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected || values.is_empty() {
            return Err(Error::DimensionMismatch {
                line: i + 1,
                expected,
                found: values.len(),
            });
        }
        rows.entry(word.to_owned()).or_insert(values);
    }
    let dim = dim.ok_or(Error::EmptyCorpus)?;
    Ok(EmbeddingTable { dim, rows })
}

/// Stopword surfaces, one per line in the backing file.
#[derive(Clone, Debug, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        StopwordSet {
            words: words.into_iter().collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<StopwordSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(StopwordSet::from_words(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned),
    ))
}

/// Cosine similarity. Zero-norm inputs are undefined rather than zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Ordered keyword ids extracted from one sentence; no stopwords, no
/// duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KeywordSet {
    pub ids: Vec<TokenId>,
}

impl KeywordSet {
    pub fn surfaces<'v>(&self, vocab: &'v Vocabulary) -> Vec<&'v str> {
        self.ids.iter().map(|&id| vocab.surface(id)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Degree-over-frequency keyword extraction. Depends only on surfaces and
/// the stopword list, never on id assignment order; an all-stopword sentence
/// yields an empty set.
pub fn extract_keywords(x: &TokenSeq, stopwords: &StopwordSet, vocab: &Vocabulary) -> KeywordSet {
    // Phrase = maximal run of non-stopword tokens, tagged with its start.
    let mut phrases: Vec<(usize, Vec<TokenId>)> = Vec::new();
    let mut current: Option<(usize, Vec<TokenId>)> = None;
    for (i, id) in x.iter().enumerate() {
        if stopwords.contains(vocab.surface(id)) {
            if let Some(p) = current.take() {
                phrases.push(p);
            }
        } else {
            current.get_or_insert_with(|| (i, Vec::new())).1.push(id);
        }
    }
    if let Some(p) = current.take() {
        phrases.push(p);
    }
    if phrases.is_empty() {
        return KeywordSet::default();
    }

    let mut freq: HashMap<TokenId, f64> = HashMap::new();
    let mut degree: HashMap<TokenId, f64> = HashMap::new();
    for (_, phrase) in &phrases {
        for &w in phrase {
            *freq.entry(w).or_insert(0.0) += 1.0;
            *degree.entry(w).or_insert(0.0) += phrase.len() as f64;
        }
    }
    let word_score = |w: TokenId| degree[&w] / freq[&w];

    let mut ranked: Vec<(f64, usize, &Vec<TokenId>)> = phrases
        .iter()
        .map(|(start, phrase)| {
            let score: f64 = phrase.iter().map(|&w| word_score(w)).sum();
            (score, *start, phrase)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let keep = x.len().div_ceil(3).min(ranked.len());
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    for (_, _, phrase) in &ranked[..keep] {
        for &w in *phrase {
            if seen.insert(w) {
                ids.push(w);
            }
        }
    }
    KeywordSet { ids }
}

/// Clamped similarity factors of one candidate against one source.
#[derive(Clone, Copy, Debug)]
pub struct SemanticParts {
    /// Keyword similarity, clamped into `[eps_clamp, 1]`.
    pub keyword: f64,
    /// Sentence similarity, clamped into `[eps_clamp, 1]`.
    pub sentence: f64,
    /// Source keywords without embeddings, skipped by the minimum.
    pub skipped_keywords: usize,
    /// `keyword^p * sentence^q`.
    pub value: f64,
}

/// Embeddings and stopwords indexed by token id for one vocabulary.
///
/// Zero-norm embedding rows are treated as missing so cosine stays defined.
#[derive(Clone, Debug)]
pub struct SemanticScorer {
    rows: Vec<Option<Vec<f64>>>,
    dim: usize,
}

impl SemanticScorer {
    pub fn new(embeddings: &EmbeddingTable, vocab: &Vocabulary) -> Self {
        let rows = (0..vocab.len() as u32)
            .map(|i| {
                embeddings
                    .get(vocab.surface(TokenId(i)))
                    .filter(|row| row.iter().any(|&v| v != 0.0))
                    .map(|row| row.to_vec())
            })
            .collect();
        SemanticScorer {
            rows,
            dim: embeddings.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, id: TokenId) -> Option<&[f64]> {
        self.rows
            .get(id.0 as usize)
            .and_then(|r| r.as_deref())
    }

    pub fn has_embedding(&self, id: TokenId) -> bool {
        self.row(id).is_some()
    }

    /// Unweighted mean of the available word vectors; `None` when no word of
    /// `x` has an embedding.
    pub fn mean_vector(&self, x: &TokenSeq) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        for id in x.iter() {
            if let Some(row) = self.row(id) {
                for (s, v) in sum.iter_mut().zip(row) {
                    *s += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        Some(sum)
    }

    /// Minimum over embeddable `keywords` of the best cosine against the
    /// embeddable words of `x`. Conventions: no usable keyword at all means
    /// nothing to preserve (1.0); keywords present but `x` unembeddable
    /// falls to `floor`. Returns the similarity and the skipped-keyword
    /// count.
    pub fn keyword_sim(&self, x: &TokenSeq, keywords: &KeywordSet, floor: f64) -> (f64, usize) {
        let embeddable: Vec<&[f64]> = x.iter().filter_map(|id| self.row(id)).collect();
        let mut skipped = 0usize;
        let mut min_sim: Option<f64> = None;
        for &kw in &keywords.ids {
            let Some(kw_row) = self.row(kw) else {
                skipped += 1;
                continue;
            };
            if embeddable.is_empty() {
                min_sim = Some(floor);
                continue;
            }
            let best = embeddable
                .iter()
                .map(|row| cosine(kw_row, row).expect("zero rows filtered at build"))
                .fold(f64::NEG_INFINITY, f64::max);
            min_sim = Some(min_sim.map_or(best, |m| m.min(best)));
        }
        (min_sim.unwrap_or(1.0), skipped)
    }

    /// Cosine of mean word vectors; [`Error::ZeroVector`] when either side
    /// has no embeddable words or a zero mean.
    pub fn sentence_sim(&self, x: &TokenSeq, x0: &TokenSeq) -> Result<f64> {
        let mx = self.mean_vector(x).ok_or(Error::ZeroVector)?;
        let mx0 = self.mean_vector(x0).ok_or(Error::ZeroVector)?;
        cosine(&mx, &mx0)
    }

    /// The combined semantic factor `keyword^p * sentence^q`, with both
    /// similarities clamped into `[eps_clamp, 1]` before exponentiation.
    pub fn semantic_score(
        &self,
        x: &TokenSeq,
        x0: &TokenSeq,
        x0_keywords: &KeywordSet,
        p: f64,
        q: f64,
        eps_clamp: f64,
        eps_key: f64,
    ) -> Result<SemanticParts> {
        let (key_raw, skipped) = self.keyword_sim(x, x0_keywords, eps_key);
        let sen_raw = self.sentence_sim(x, x0)?;
        let keyword = key_raw.clamp(eps_clamp, 1.0);
        let sentence = sen_raw.clamp(eps_clamp, 1.0);
        Ok(SemanticParts {
            keyword,
            sentence,
            skipped_keywords: skipped,
            value: keyword.powf(p) * sentence.powf(q),
        })
    }
}
