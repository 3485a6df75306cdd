//! Corpus normalization and vocabulary interning.
//!
//! Normalization is deliberately blunt: Unicode lowercasing, removal of every
//! Unicode punctuation character (category `P*`), then whitespace splitting.
//! Digits and symbol characters survive; `don't` becomes `dont`. Sentences
//! that normalize to nothing are rejected ([`tokenize`]) or skipped
//! ([`load_corpus`]).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Index into a [`Vocabulary`]. Ids are dense and start at the reserved
/// specials; sequences over the same vocabulary compare by id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TokenId(pub u32);

/// An interned sentence: a sequence of token ids.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct TokenSeq(pub Vec<TokenId>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn iter(&self) -> std::iter::Copied<std::slice::Iter<'_, TokenId>> {
        self.0.iter().copied()
    }

    pub fn reversed(&self) -> TokenSeq {
        TokenSeq(self.0.iter().rev().copied().collect())
    }

    /// Copy with `w` inserted before position `pos` (`pos == len` appends).
    pub fn with_insert(&self, pos: usize, w: TokenId) -> TokenSeq {
        let mut v = self.0.clone();
        v.insert(pos, w);
        TokenSeq(v)
    }

    /// Copy with the token at `pos` replaced by `w`.
    pub fn with_replace(&self, pos: usize, w: TokenId) -> TokenSeq {
        let mut v = self.0.clone();
        v[pos] = w;
        TokenSeq(v)
    }

    /// Copy with the token at `pos` removed.
    pub fn with_delete(&self, pos: usize) -> TokenSeq {
        let mut v = self.0.clone();
        v.remove(pos);
        TokenSeq(v)
    }
}

impl std::ops::Index<usize> for TokenSeq {
    type Output = TokenId;
    fn index(&self, i: usize) -> &TokenId {
        &self.0[i]
    }
}

impl FromIterator<TokenId> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

pub const UNK_SURFACE: &str = "<unk>";
pub const BOS_SURFACE: &str = "<s>";
pub const EOS_SURFACE: &str = "</s>";

static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}+").expect("static regex"));

/// Lowercase, strip Unicode punctuation, split on whitespace.
///
/// Errors with [`Error::EmptyAfterNormalization`] when nothing survives.
pub fn tokenize(raw: &str) -> Result<Vec<String>> {
    let lowered = raw.to_lowercase();
    let stripped = PUNCT.replace_all(&lowered, "");
    let tokens: Vec<String> = stripped.split_whitespace().map(str::to_owned).collect();
    if tokens.is_empty() {
        return Err(Error::EmptyAfterNormalization);
    }
    Ok(tokens)
}

/// Read a corpus file: one sentence per line, normalized via [`tokenize`].
///
/// Lines that normalize to nothing are skipped. Sentences whose normalized
/// token sequence has been seen before are dropped, keeping the first
/// occurrence; order is otherwise preserved. An entirely unusable file is
/// [`Error::EmptyCorpus`].
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut sentences = Vec::new();
    for line in text.lines() {
        match tokenize(line) {
            Ok(tokens) => {
                if seen.insert(tokens.clone()) {
                    sentences.push(tokens);
                }
            }
            Err(Error::EmptyAfterNormalization) => continue,
            Err(e) => return Err(e),
        }
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(sentences)
}

/// Bidirectional token/id mapping with reserved specials.
///
/// Ids are dense: `<unk>` = 0, `<s>` = 1, `</s>` = 2, then corpus tokens in
/// first-occurrence order. The same corpus always produces the same mapping.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub const UNK: TokenId = TokenId(0);
    pub const BOS: TokenId = TokenId(1);
    pub const EOS: TokenId = TokenId(2);

    fn with_specials() -> Self {
        let mut v = Vocabulary {
            surfaces: Vec::new(),
            index: HashMap::new(),
        };
        for s in [UNK_SURFACE, BOS_SURFACE, EOS_SURFACE] {
            let id = v.surfaces.len() as u32;
            v.surfaces.push(s.to_owned());
            v.index.insert(s.to_owned(), id);
        }
        v
    }

    /// Number of entries, specials included.
    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id for `surface`, falling back to [`Vocabulary::UNK`].
    pub fn id(&self, surface: &str) -> TokenId {
        self.lookup(surface).unwrap_or(Self::UNK)
    }

    /// Id for `surface` if present.
    pub fn lookup(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).map(|&i| TokenId(i))
    }

    /// Surface for `id`. Panics on an id from a different vocabulary.
    pub fn surface(&self, id: TokenId) -> &str {
        &self.surfaces[id.0 as usize]
    }

    /// Non-special ids in ascending order: the proposal candidate pool.
    pub fn words(&self) -> impl Iterator<Item = TokenId> + '_ {
        (3..self.surfaces.len() as u32).map(TokenId)
    }

    /// Intern a normalized token list; unknown surfaces map to `<unk>`.
    pub fn intern(&self, tokens: &[String]) -> TokenSeq {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Tokenize a raw line and intern it.
    pub fn encode_line(&self, raw: &str) -> Result<TokenSeq> {
        Ok(self.intern(&tokenize(raw)?))
    }

    /// Space-joined surfaces of `seq`.
    pub fn decode(&self, seq: &TokenSeq) -> String {
        let parts: Vec<&str> = seq.iter().map(|id| self.surface(id)).collect();
        parts.join(" ")
    }

    /// Dump as `id<TAB>surface` lines in ascending id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (i, s) in self.surfaces.iter().enumerate() {
            out.push_str(&format!("{i}\t{s}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Inverse of [`Vocabulary::save`]; validates dense ids and the reserved
    /// specials.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let malformed = |line: usize, reason: &str| Error::Malformed {
            path: path.to_owned(),
            line,
            reason: reason.to_owned(),
        };
        let mut v = Vocabulary {
            surfaces: Vec::new(),
            index: HashMap::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let (id, surface) = line
                .split_once('\t')
                .ok_or_else(|| malformed(i + 1, "expected id<TAB>surface"))?;
            let id: usize = id
                .parse()
                .map_err(|_| malformed(i + 1, "id is not an integer"))?;
            if id != i {
                return Err(malformed(i + 1, "ids are not dense and ascending"));
            }
            if v.index.insert(surface.to_owned(), id as u32).is_some() {
                return Err(malformed(i + 1, "duplicate surface"));
            }
            v.surfaces.push(surface.to_owned());
        }
        let specials = [UNK_SURFACE, BOS_SURFACE, EOS_SURFACE];
        if v.surfaces.len() < specials.len()
            || v.surfaces[..specials.len()] != specials.map(str::to_owned)
        {
            return Err(malformed(
                0,
                "first three entries must be <unk>, <s>, </s>",
            ));
        }
        Ok(v)
    }
}

/// Build a vocabulary from normalized sentences.
///
/// Tokens occurring fewer than `min_count` times are left out and intern to
/// `<unk>`. Ids follow first occurrence in the corpus, so the mapping is a
/// pure function of the sentence list.
pub fn build_vocab(sentences: &[Vec<String>], min_count: usize) -> Result<Vocabulary> {
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for sent in sentences {
        for tok in sent {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let mut v = Vocabulary::with_specials();
    for sent in sentences {
        for tok in sent {
            if counts[tok.as_str()] < min_count.max(1) {
                continue;
            }
            if !v.index.contains_key(tok) {
                let id = v.surfaces.len() as u32;
                v.surfaces.push(tok.clone());
                v.index.insert(tok.clone(), id);
            }
        }
    }
    Ok(v)
}
