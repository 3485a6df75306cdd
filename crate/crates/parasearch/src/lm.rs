//! Interpolated n-gram language models over interned sentences.
//!
//! A model of order `n` mixes add-k-smoothed conditional estimates of orders
//! `1..=n` with fixed per-order weights. Each level is trained on sentences
//! padded with `level - 1` leading `<s>` tokens and a trailing `</s>`; the
//! outcome space is every vocabulary entry except `<s>`, so each conditional
//! distribution sums to one exactly.
//!
//! A backward model is the same construction trained on reversed sentences
//! and scores its input as given; callers reverse sequences themselves. For
//! an order-2 model with all weight on the top order, `fwd.log_prob(x)`
//! equals `bwd.log_prob(x.reversed())` exactly: the padded n-gram and
//! context count multisets of the two directions are mirror images. Mixing
//! in lower orders breaks that identity, and so does order 3 and up (BOS
//! padding is `order - 1` deep while `</s>` is scored once, so the boundary
//! events stop mirroring); the identity test pins the exact configuration.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::{TokenId, TokenSeq, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward => write!(f, "forward"),
            Direction::Backward => write!(f, "backward"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmConfig {
    /// Highest n-gram order; 1 = unigram model.
    pub order: usize,
    /// Add-k constant applied inside every level's conditional estimate.
    pub add_k: f64,
    /// Mixture weight per level, index 0 = unigram. Must sum to 1.
    pub level_weights: Vec<f64>,
    /// Whether `log_prob` includes the `</s>` transition.
    pub score_eos: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 3,
            add_k: 0.1,
            level_weights: vec![0.2, 0.3, 0.5],
            score_eos: true,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("lm order must be at least 1".into()));
        }
        if self.level_weights.len() != self.order {
            return Err(Error::Config(format!(
                "lm needs {} level weights, got {}",
                self.order,
                self.level_weights.len()
            )));
        }
        let sum: f64 = self.level_weights.iter().sum();
        if self.level_weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(
                "lm level weights must be non-negative and sum to 1".into(),
            ));
        }
        if self.add_k < 0.0 {
            return Err(Error::Config("lm add_k must be non-negative".into()));
        }
        Ok(())
    }
}

/// Count tables for one n-gram level.
#[derive(Clone, Debug, Default)]
struct Level {
    /// Full n-gram -> occurrence count.
    grams: HashMap<Vec<TokenId>, u32>,
    /// Context (n-gram minus last token) -> total continuations.
    contexts: HashMap<Vec<TokenId>, u32>,
}

#[derive(Clone, Debug)]
pub struct NGramLm {
    cfg: LmConfig,
    direction: Direction,
    /// `levels[i]` holds (i+1)-gram counts.
    levels: Vec<Level>,
    /// Size of the outcome space: vocabulary minus `<s>`.
    outcomes: usize,
}

/// Train a model on interned sentences. `Backward` reverses each sentence
/// before counting and changes nothing else.
pub fn train_lm(
    sentences: &[TokenSeq],
    vocab: &Vocabulary,
    cfg: LmConfig,
    direction: Direction,
) -> Result<NGramLm> {
    cfg.validate()?;
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut levels = vec![Level::default(); cfg.order];
    for sent in sentences {
        let tokens: Vec<TokenId> = match direction {
            Direction::Forward => sent.iter().collect(),
            Direction::Backward => sent.iter().rev().collect(),
        };
        for (i, level) in levels.iter_mut().enumerate() {
            let n = i + 1;
            let mut padded = vec![Vocabulary::BOS; n - 1];
            padded.extend_from_slice(&tokens);
            padded.push(Vocabulary::EOS);
            for window in padded.windows(n) {
                *level.grams.entry(window.to_vec()).or_insert(0) += 1;
                *level.contexts.entry(window[..n - 1].to_vec()).or_insert(0) += 1;
            }
        }
    }
    Ok(NGramLm {
        cfg,
        direction,
        levels,
        outcomes: vocab.len() - 1,
    })
}

impl NGramLm {
    pub fn order(&self) -> usize {
        self.cfg.order
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn config(&self) -> &LmConfig {
        &self.cfg
    }

    /// One level's add-k conditional estimate. Context longer than `level - 1`
    /// is truncated to its most recent tokens. Unsmoothed unseen contexts
    /// yield 0.
    fn level_prob(&self, level: usize, ctx: &[TokenId], w: TokenId) -> f64 {
        let need = level - 1;
        let ctx = &ctx[ctx.len() - need..];
        let tables = &self.levels[level - 1];
        let mut key = Vec::with_capacity(level);
        key.extend_from_slice(ctx);
        key.push(w);
        let gram = tables.grams.get(&key[..]).copied().unwrap_or(0) as f64;
        let total = tables.contexts.get(ctx).copied().unwrap_or(0) as f64;
        let den = total + self.cfg.add_k * self.outcomes as f64;
        if den == 0.0 {
            return 0.0;
        }
        (gram + self.cfg.add_k) / den
    }

    /// Interpolated conditional probability of `w` given the most recent
    /// `order - 1` tokens of `ctx` (shorter contexts must be BOS-padded by
    /// the caller where that is intended).
    pub fn cond_prob(&self, ctx: &[TokenId], w: TokenId) -> f64 {
        let mut p = 0.0;
        for level in 1..=self.cfg.order {
            let weight = self.cfg.level_weights[level - 1];
            if weight == 0.0 {
                continue;
            }
            let avail = ctx.len().min(level - 1);
            p += weight * self.level_prob_padded(level, ctx, avail, w);
        }
        p
    }

    /// Like [`NGramLm::level_prob`] but BOS-pads contexts shorter than the
    /// level needs.
    fn level_prob_padded(&self, level: usize, ctx: &[TokenId], avail: usize, w: TokenId) -> f64 {
        let need = level - 1;
        if avail >= need {
            return self.level_prob(level, ctx, w);
        }
        let mut padded = vec![Vocabulary::BOS; need - avail];
        padded.extend_from_slice(&ctx[ctx.len() - avail..]);
        self.level_prob(level, &padded, w)
    }

    /// Log probability of a sentence: sum of interpolated conditionals over
    /// its tokens, plus the `</s>` transition unless disabled. Returns
    /// `-inf` where an unsmoothed model assigns zero.
    pub fn log_prob(&self, x: &TokenSeq) -> f64 {
        let n = self.cfg.order;
        let mut padded = vec![Vocabulary::BOS; n - 1];
        padded.extend(x.iter());
        if self.cfg.score_eos {
            padded.push(Vocabulary::EOS);
        }
        let mut lp = 0.0;
        for i in (n - 1)..padded.len() {
            let p = self.cond_prob(&padded[i.saturating_sub(n - 1)..i], padded[i]);
            lp += p.ln();
        }
        lp
    }

    /// `exp(log_prob)`: the sentence probability, in `(0, 1]` for smoothed
    /// models.
    pub fn fluency(&self, x: &TokenSeq) -> f64 {
        self.log_prob(x).exp()
    }

    /// Full conditional distribution over the outcome space given `ctx`;
    /// pairs of (token, probability) in ascending id order, `<s>` excluded.
    pub fn distribution(&self, ctx: &[TokenId], vocab: &Vocabulary) -> Vec<(TokenId, f64)> {
        (0..vocab.len() as u32)
            .map(TokenId)
            .filter(|&id| id != Vocabulary::BOS)
            .map(|id| (id, self.cond_prob(ctx, id)))
            .collect()
    }

    /// Persist as a line-oriented count dump. Counts are integers and config
    /// floats round-trip through their shortest decimal form, so
    /// save-then-load reproduces identical probabilities.
    pub fn save(&self, path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str("ngramlm v1\n");
        out.push_str(&format!("order {}\n", self.cfg.order));
        out.push_str(&format!("direction {}\n", self.direction));
        out.push_str(&format!("add_k {}\n", self.cfg.add_k));
        let weights: Vec<String> = self.cfg.level_weights.iter().map(f64::to_string).collect();
        out.push_str(&format!("weights {}\n", weights.join(" ")));
        out.push_str(&format!("score_eos {}\n", self.cfg.score_eos));
        out.push_str(&format!("outcomes {}\n", self.outcomes));
        for level in &self.levels {
            let mut grams: Vec<(&Vec<TokenId>, &u32)> = level.grams.iter().collect();
            grams.sort_unstable_by(|a, b| a.0.cmp(b.0));
            for (gram, count) in grams {
                let surfaces: Vec<&str> = gram.iter().map(|&id| vocab.surface(id)).collect();
                out.push_str(&format!("{}\t{}\n", surfaces.join(" "), count));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Inverse of [`NGramLm::save`]. The vocabulary must be the one the model
    /// was trained with; unknown surfaces or a mismatched outcome count are
    /// rejected rather than silently remapped.
    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<NGramLm> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let malformed = |line: usize, reason: String| Error::Malformed {
            path: path.to_owned(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let mut header = HashMap::new();
        let (_, magic) = lines
            .next()
            .ok_or_else(|| malformed(1, "empty file".into()))?;
        if magic != "ngramlm v1" {
            return Err(malformed(1, format!("bad magic line {magic:?}")));
        }
        let mut grams_start = Vec::new();
        for (i, line) in lines {
            if let Some((gram, count)) = line.split_once('\t') {
                grams_start.push((i, gram.to_owned(), count.to_owned()));
            } else if let Some((key, value)) = line.split_once(' ') {
                header.insert(key.to_owned(), value.to_owned());
            } else if !line.is_empty() {
                return Err(malformed(i + 1, format!("unparseable line {line:?}")));
            }
        }
        let get = |key: &str| {
            header
                .get(key)
                .cloned()
                .ok_or_else(|| malformed(0, format!("missing header field {key}")))
        };
        let order: usize = get("order")?
            .parse()
            .map_err(|_| malformed(0, "bad order".into()))?;
        let direction = match get("direction")?.as_str() {
            "forward" => Direction::Forward,
            "backward" => Direction::Backward,
            other => return Err(malformed(0, format!("bad direction {other:?}"))),
        };
        let add_k: f64 = get("add_k")?
            .parse()
            .map_err(|_| malformed(0, "bad add_k".into()))?;
        let level_weights: Vec<f64> = get("weights")?
            .split(' ')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| malformed(0, "bad weights".into()))?;
        let score_eos: bool = get("score_eos")?
            .parse()
            .map_err(|_| malformed(0, "bad score_eos".into()))?;
        let outcomes: usize = get("outcomes")?
            .parse()
            .map_err(|_| malformed(0, "bad outcomes".into()))?;
        if outcomes != vocab.len() - 1 {
            return Err(malformed(
                0,
                format!(
                    "model expects {} outcomes but vocabulary has {}",
                    outcomes,
                    vocab.len() - 1
                ),
            ));
        }
        let cfg = LmConfig {
            order,
            add_k,
            level_weights,
            score_eos,
        };
        cfg.validate().map_err(|e| malformed(0, e.to_string()))?;
        let mut levels = vec![Level::default(); order];
        for (i, gram, count) in grams_start {
            let ids: Option<Vec<TokenId>> = gram.split(' ').map(|s| vocab.lookup(s)).collect();
            let ids = ids.ok_or_else(|| {
                malformed(i + 1, format!("n-gram {gram:?} has unknown surfaces"))
            })?;
            if ids.is_empty() || ids.len() > order {
                return Err(malformed(i + 1, format!("n-gram width {} out of range", ids.len())));
            }
            let count: u32 = count
                .parse()
                .map_err(|_| malformed(i + 1, "bad count".into()))?;
            let level = &mut levels[ids.len() - 1];
            if level.grams.insert(ids.clone(), count).is_some() {
                return Err(malformed(i + 1, format!("duplicate n-gram {gram:?}")));
            }
            *level
                .contexts
                .entry(ids[..ids.len() - 1].to_vec())
                .or_insert(0) += count;
        }
        Ok(NGramLm {
            cfg,
            direction,
            levels,
            outcomes,
        })
    }
}

/// The `k` vocabulary words that best fill a slot, ranked by the product of
/// the forward conditional given the left context and the backward
/// conditional given the right context.
///
/// `insert` proposes before position `pos` (`0..=len`); `replace` fills
/// position `pos` (`0..len`). Specials are never candidates. Ties break by
/// ascending token id, so the result is deterministic.
pub fn topk_candidates(
    fwd: &NGramLm,
    bwd: &NGramLm,
    x: &TokenSeq,
    pos: usize,
    insert: bool,
    k: usize,
    vocab: &Vocabulary,
) -> Result<Vec<TokenId>> {
    let len = x.len();
    let limit = if insert { len } else { len.saturating_sub(1) };
    if pos > limit {
        return Err(Error::InvalidPosition {
            position: pos,
            len,
            mode: if insert { "insert" } else { "replace" },
        });
    }
    let prefix = &x.as_slice()[..pos];
    let suffix = &x.as_slice()[if insert { pos } else { pos + 1 }..];

    let fwd_ctx = padded_context(prefix, fwd.order());
    // The backward model reads right-to-left: its context is the nearest
    // suffix tokens in reverse, BOS-padded at the sentence end.
    let reversed: Vec<TokenId> = suffix.iter().rev().copied().collect();
    let bwd_ctx = padded_context(&reversed, bwd.order());

    let mut scored: Vec<(TokenId, f64)> = vocab
        .words()
        .map(|w| (w, fwd.cond_prob(&fwd_ctx, w) * bwd.cond_prob(&bwd_ctx, w)))
        .collect();
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(w, _)| w).collect())
}

/// Last `order - 1` tokens of `tokens`, BOS-padded on the left when short.
fn padded_context(tokens: &[TokenId], order: usize) -> Vec<TokenId> {
    let need = order - 1;
    let take = tokens.len().min(need);
    let mut ctx = vec![Vocabulary::BOS; need - take];
    ctx.extend_from_slice(&tokens[tokens.len() - take..]);
    ctx
}

/// Union of LM candidates and the words of `x0`: candidate order first, then
/// `x0`-only words in sentence order, duplicates removed. `<s>`/`</s>` never
/// enter; anything else in `x0` (including `<unk>`) is eligible for copying.
pub fn copy_augment(candidates: Vec<TokenId>, x0: &TokenSeq) -> Vec<TokenId> {
    let mut out = candidates;
    for w in x0.iter() {
        if w == Vocabulary::BOS || w == Vocabulary::EOS {
            continue;
        }
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}
