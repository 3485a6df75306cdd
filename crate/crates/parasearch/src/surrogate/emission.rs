//! The copy/bigram/unigram emission mixture: a sentence-given-source
//! probability model fitted on pseudo-parallel pairs, with mixture weights
//! learned by expectation-maximization.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::{TokenId, TokenSeq, Vocabulary};
use crate::error::{Error, Result};
use crate::objective::{Objective, PreparedObjective};
use crate::trajectory::PseudoPair;

/// Training settings for [`train_s2s`].
#[derive(Clone, Copy, Debug)]
pub struct EmissionHyper {
    pub add_k: f64,
    pub em_iters: usize,
}

impl Default for EmissionHyper {
    fn default() -> Self {
        EmissionHyper {
            add_k: 0.1,
            em_iters: 50,
        }
    }
}

impl EmissionHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.add_k.is_finite() && self.add_k > 0.0) {
            return Err(Error::Config(format!(
                "add_k must be positive, got {}",
                self.add_k
            )));
        }
        if self.em_iters == 0 {
            return Err(Error::Config("em_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cross-entropy over the training positions before the first update and
/// after each iteration.
#[derive(Clone, Debug)]
pub struct EmissionReport {
    pub iter_ce: Vec<f64>,
    pub final_ce: f64,
}

/// Per-word mixture `λ_copy Copy(w|x0) + λ_bi P_bi(w|prev) + λ_uni P_uni(w)`.
///
/// Every component is a distribution over the same outcome space: all
/// vocabulary ids except BOS (so EOS is an ordinary outcome and sentence
/// length carries probability). Words emitted in sequence give a
/// sentence-level probability via [`EmissionModel::s2s_prob`].
#[derive(Clone, Debug)]
pub struct EmissionModel {
    lambda: [f64; 3],
    add_k: f64,
    /// Count of smoothed outcomes: the vocabulary minus BOS.
    outcomes: usize,
    uni: HashMap<TokenId, u64>,
    uni_total: u64,
    bi: HashMap<(TokenId, TokenId), u64>,
    bi_ctx_totals: HashMap<TokenId, u64>,
}

impl EmissionModel {
    /// `(λ_copy, λ_bi, λ_uni)`.
    pub fn lambda(&self) -> [f64; 3] {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: [f64; 3]) -> Result<()> {
        let sum: f64 = lambda.iter().sum();
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mixture weights must be non-negative and sum to 1, got {lambda:?}"
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    /// Probability of `w` under the copy distribution of `x0`: its count in
    /// `x0` over `len(x0) + 1`, with the remaining single share on EOS.
    pub fn copy_prob(&self, w: TokenId, x0: &TokenSeq) -> f64 {
        let denom = (x0.len() + 1) as f64;
        if w == Vocabulary::EOS {
            return 1.0 / denom;
        }
        let count = x0.iter().filter(|t| *t == w).count();
        count as f64 / denom
    }

    /// Add-k bigram probability of `w` after `prev`. An unseen context
    /// falls back to the uniform `1 / outcomes`.
    pub fn bi_prob(&self, prev: TokenId, w: TokenId) -> f64 {
        let count = self.bi.get(&(prev, w)).copied().unwrap_or(0) as f64;
        let total = self.bi_ctx_totals.get(&prev).copied().unwrap_or(0) as f64;
        (count + self.add_k) / (total + self.add_k * self.outcomes as f64)
    }

    /// Add-k unigram probability of `w`.
    pub fn uni_prob(&self, w: TokenId) -> f64 {
        let count = self.uni.get(&w).copied().unwrap_or(0) as f64;
        (count + self.add_k) / (self.uni_total as f64 + self.add_k * self.outcomes as f64)
    }

    /// The full per-position mixture for emitting `w` after `prev`.
    pub fn word_prob(&self, prev: TokenId, w: TokenId, x0: &TokenSeq) -> f64 {
        self.lambda[0] * self.copy_prob(w, x0)
            + self.lambda[1] * self.bi_prob(prev, w)
            + self.lambda[2] * self.uni_prob(w)
    }

    /// Probability of emitting the whole sentence `x` then EOS, given `x0`.
    /// The product runs in log space and is exponentiated once.
    pub fn s2s_prob(&self, x: &TokenSeq, x0: &TokenSeq) -> f64 {
        let mut prev = Vocabulary::BOS;
        let mut log_p = 0.0;
        for w in x.iter().chain(std::iter::once(Vocabulary::EOS)) {
            log_p += self.word_prob(prev, w, x0).ln();
            prev = w;
        }
        log_p.exp()
    }
}

fn with_sentinels(xt: &TokenSeq) -> Vec<TokenId> {
    let mut seq = Vec::with_capacity(xt.len() + 2);
    seq.push(Vocabulary::BOS);
    seq.extend(xt.iter());
    seq.push(Vocabulary::EOS);
    seq
}

/// Fit an emission model on pseudo-parallel pairs: count tables from the
/// output side, then mixture weights by expectation-maximization on the
/// pooled per-position cross-entropy.
pub fn train_s2s(
    pairs: &[PseudoPair],
    vocab: &Vocabulary,
    hyper: &EmissionHyper,
) -> Result<(EmissionModel, EmissionReport)> {
    hyper.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }

    let mut uni = HashMap::new();
    let mut uni_total = 0u64;
    let mut bi = HashMap::new();
    let mut bi_ctx_totals = HashMap::new();
    for pair in pairs {
        let seq = with_sentinels(&pair.xt);
        for window in seq.windows(2) {
            let (prev, w) = (window[0], window[1]);
            *uni.entry(w).or_insert(0) += 1;
            uni_total += 1;
            *bi.entry((prev, w)).or_insert(0) += 1;
            *bi_ctx_totals.entry(prev).or_insert(0) += 1;
        }
    }

    let mut model = EmissionModel {
        lambda: [1.0 / 3.0; 3],
        add_k: hyper.add_k,
        outcomes: vocab.len() - 1,
        uni,
        uni_total,
        bi,
        bi_ctx_totals,
    };

    // With the tables fixed, each position's three component probabilities
    // never change across iterations.
    let mut components: Vec<[f64; 3]> = Vec::new();
    for pair in pairs {
        let mut prev = Vocabulary::BOS;
        for w in pair.xt.iter().chain(std::iter::once(Vocabulary::EOS)) {
            components.push([
                model.copy_prob(w, &pair.x0),
                model.bi_prob(prev, w),
                model.uni_prob(w),
            ]);
            prev = w;
        }
    }

    let cross_entropy = |lambda: &[f64; 3]| -> f64 {
        -components
            .iter()
            .map(|c| (lambda[0] * c[0] + lambda[1] * c[1] + lambda[2] * c[2]).ln())
            .sum::<f64>()
    };

    let mut lambda = model.lambda;
    let mut iter_ce = vec![cross_entropy(&lambda)];
    for _ in 0..hyper.em_iters {
        let mut resp_sum = [0.0; 3];
        for c in &components {
            let mix = lambda[0] * c[0] + lambda[1] * c[1] + lambda[2] * c[2];
            for j in 0..3 {
                resp_sum[j] += lambda[j] * c[j] / mix;
            }
        }
        let n = components.len() as f64;
        lambda = [resp_sum[0] / n, resp_sum[1] / n, resp_sum[2] / n];
        let ce = cross_entropy(&lambda);
        let prev_ce = *iter_ce.last().expect("seeded with the initial value");
        iter_ce.push(ce);
        if (prev_ce - ce).abs() <= 1e-12 * prev_ce.abs().max(1.0) {
            break;
        }
    }
    model.lambda = lambda;
    let final_ce = *iter_ce.last().expect("at least the initial value");
    Ok((model, EmissionReport { iter_ce, final_ce }))
}

/// A trained emission model as an acceptance objective.
pub struct EmissionObjective {
    model: EmissionModel,
}

impl EmissionObjective {
    pub fn new(model: EmissionModel) -> Self {
        EmissionObjective { model }
    }

    pub fn model(&self) -> &EmissionModel {
        &self.model
    }
}

impl Objective for EmissionObjective {
    fn prepare<'a>(&'a self, x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>> {
        Ok(Box::new(EmissionPrepared {
            model: &self.model,
            x0: x0.clone(),
        }))
    }
}

struct EmissionPrepared<'a> {
    model: &'a EmissionModel,
    x0: TokenSeq,
}

impl PreparedObjective for EmissionPrepared<'_> {
    fn eval(&self, x: &TokenSeq) -> Result<f64> {
        Ok(self.model.s2s_prob(x, &self.x0))
    }
}

/// Write an emission model to a self-describing text file, with count
/// tables keyed by word surface.
pub fn save_emission(
    path: impl AsRef<Path>,
    model: &EmissionModel,
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("emission v1\n");
    out.push_str(&format!(
        "lambda {} {} {}\n",
        model.lambda[0], model.lambda[1], model.lambda[2]
    ));
    out.push_str(&format!("add_k {}\n", model.add_k));
    out.push_str(&format!("outcomes {}\n", model.outcomes));

    let mut uni: Vec<(&str, u64)> = model
        .uni
        .iter()
        .map(|(id, c)| (vocab.surface(*id), *c))
        .collect();
    uni.sort_unstable();
    for (surface, count) in uni {
        out.push_str(&format!("uni {surface} {count}\n"));
    }
    let mut bi: Vec<(&str, &str, u64)> = model
        .bi
        .iter()
        .map(|((prev, w), c)| (vocab.surface(*prev), vocab.surface(*w), *c))
        .collect();
    bi.sort_unstable();
    for (prev, w, count) in bi {
        out.push_str(&format!("bi {prev} {w} {count}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a file written by [`save_emission`]. Surfaces missing from `vocab`
/// fold into the unknown-word id, merging their counts.
pub fn load_emission(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<EmissionModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, reason: String| Error::Malformed {
        path: path.to_owned(),
        line,
        reason,
    };
    let parse_f64 = |line: usize, v: &str| -> Result<f64> {
        v.parse::<f64>()
            .map_err(|_| malformed(line, format!("bad float {v:?}")))
    };
    let parse_u64 = |line: usize, v: &str| -> Result<u64> {
        v.parse::<u64>()
            .map_err(|_| malformed(line, format!("bad count {v:?}")))
    };

    let mut lambda = None;
    let mut add_k = None;
    let mut outcomes = None;
    let mut uni: HashMap<TokenId, u64> = HashMap::new();
    let mut uni_total = 0u64;
    let mut bi: HashMap<(TokenId, TokenId), u64> = HashMap::new();
    let mut bi_ctx_totals: HashMap<TokenId, u64> = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if i == 0 {
            if line != "emission v1" {
                return Err(malformed(line_no, format!("bad header {line:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match fields[..] {
            ["lambda", a, b, c] => {
                lambda = Some([
                    parse_f64(line_no, a)?,
                    parse_f64(line_no, b)?,
                    parse_f64(line_no, c)?,
                ]);
            }
            ["add_k", v] => add_k = Some(parse_f64(line_no, v)?),
            ["outcomes", v] => {
                outcomes = Some(parse_u64(line_no, v)? as usize);
            }
            ["uni", surface, count] => {
                let count = parse_u64(line_no, count)?;
                *uni.entry(vocab.id(surface)).or_insert(0) += count;
                uni_total += count;
            }
            ["bi", prev, surface, count] => {
                let count = parse_u64(line_no, count)?;
                let key = (vocab.id(prev), vocab.id(surface));
                *bi.entry(key).or_insert(0) += count;
                *bi_ctx_totals.entry(key.0).or_insert(0) += count;
            }
            _ => return Err(malformed(line_no, format!("unrecognized line {line:?}"))),
        }
    }

    let lambda = lambda.ok_or_else(|| malformed(0, "missing lambda line".into()))?;
    let add_k = add_k.ok_or_else(|| malformed(0, "missing add_k line".into()))?;
    let outcomes = outcomes.ok_or_else(|| malformed(0, "missing outcomes line".into()))?;
    if !(add_k.is_finite() && add_k > 0.0) {
        return Err(malformed(0, format!("add_k must be positive, got {add_k}")));
    }
    if outcomes == 0 {
        return Err(malformed(0, "outcomes must be at least 1".into()));
    }
    let mut model = EmissionModel {
        lambda: [1.0 / 3.0; 3],
        add_k,
        outcomes,
        uni,
        uni_total,
        bi,
        bi_ctx_totals,
    };
    model
        .set_lambda(lambda)
        .map_err(|e| malformed(0, e.to_string()))?;
    Ok(model)
}
