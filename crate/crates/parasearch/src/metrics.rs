//! Overlap metrics: BLEU with clipped n-gram precision, the
//! source-discounted iBLEU variant, and the BLEU-based lexical
//! dissimilarity factor used by the scoring function.
//!
//! The BLEU here follows the usual corpus conventions at sentence level:
//! clipped matches against the best reference, a geometric mean with fixed
//! `1/max_n` exponents, and a brevity penalty against the closest reference
//! length (ties to the shorter one). Unigram precision is never smoothed;
//! higher orders get add-`k` smoothing when `smooth_k > 0`. With `smooth_k
//! = 0`, orders the candidate is too short to form drop out instead of
//! zeroing the score, but a formable order with no matches still zeroes it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{TokenId, TokenSeq};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_N: usize = 4;
pub const DEFAULT_SMOOTH_K: f64 = 1.0;
pub const DEFAULT_IBLEU_ALPHA: f64 = 0.9;

/// Per-order n-gram counts of one sentence, reusable across many BLEU
/// calls against the same reference.
#[derive(Clone, Debug)]
pub struct NgramProfile {
    len: usize,
    counts: Vec<HashMap<Vec<TokenId>, u32>>,
}

impl NgramProfile {
    pub fn new(s: &TokenSeq, max_n: usize) -> Self {
        let counts = (1..=max_n)
            .map(|n| {
                let mut m: HashMap<Vec<TokenId>, u32> = HashMap::new();
                if s.len() >= n {
                    for w in s.as_slice().windows(n) {
                        *m.entry(w.to_vec()).or_insert(0) += 1;
                    }
                }
                m
            })
            .collect();
        NgramProfile { len: s.len(), counts }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn count(&self, n: usize, gram: &[TokenId]) -> u32 {
        self.counts[n - 1].get(gram).copied().unwrap_or(0)
    }
}

/// BLEU of `candidate` against precomputed reference profiles.
pub fn bleu_against(
    candidate: &TokenSeq,
    refs: &[&NgramProfile],
    max_n: usize,
    smooth_k: f64,
) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::EmptyInput("references"));
    }
    if max_n == 0 {
        return Err(Error::Config("bleu max_n must be positive".into()));
    }
    for r in refs {
        if r.counts.len() < max_n {
            return Err(Error::Config(format!(
                "reference profile covers {} orders, bleu needs {max_n}",
                r.counts.len()
            )));
        }
    }
    let c = candidate.len();
    if c == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let k = if n == 1 { 0.0 } else { smooth_k };
        let mut cand_counts: HashMap<&[TokenId], u32> = HashMap::new();
        if c >= n {
            for w in candidate.as_slice().windows(n) {
                *cand_counts.entry(w).or_insert(0) += 1;
            }
        }
        let total: u32 = cand_counts.values().sum();
        if total as f64 + k == 0.0 {
            continue;
        }
        let mut matched = 0u32;
        for (gram, &cnt) in &cand_counts {
            let best = refs.iter().map(|r| r.count(n, gram)).max().unwrap_or(0);
            matched += cnt.min(best);
        }
        let ratio = (matched as f64 + k) / (total as f64 + k);
        if ratio == 0.0 {
            return Ok(0.0);
        }
        log_sum += ratio.ln();
    }

    let precision = (log_sum / max_n as f64).exp();
    let r = closest_ref_len(c, refs);
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    Ok(bp * precision)
}

fn closest_ref_len(c: usize, refs: &[&NgramProfile]) -> usize {
    let mut best = refs[0].len();
    let mut best_dist = best.abs_diff(c);
    for r in &refs[1..] {
        let dist = r.len().abs_diff(c);
        if dist < best_dist || (dist == best_dist && r.len() < best) {
            best = r.len();
            best_dist = dist;
        }
    }
    best
}

/// BLEU of `candidate` against plain reference sentences.
pub fn bleu(
    candidate: &TokenSeq,
    refs: &[&TokenSeq],
    max_n: usize,
    smooth_k: f64,
) -> Result<f64> {
    let profiles: Vec<NgramProfile> = refs.iter().map(|r| NgramProfile::new(r, max_n)).collect();
    let borrowed: Vec<&NgramProfile> = profiles.iter().collect();
    bleu_against(candidate, &borrowed, max_n, smooth_k)
}

/// Smoothed BLEU-4 against the reference, discounted by smoothed BLEU-4
/// against the source: `alpha * bleu(out, ref) - (1 - alpha) * bleu(out,
/// src)`.
pub fn ibleu(
    output: &TokenSeq,
    reference: &TokenSeq,
    source: &TokenSeq,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "ibleu alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let to_ref = bleu(output, &[reference], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?;
    let to_src = bleu(output, &[source], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?;
    Ok(alpha * to_ref - (1.0 - alpha) * to_src)
}

/// `(1 - unsmoothed BLEU-4 against the source)`, clamped into `[eps, 1]`
/// and raised to `s`. An unchanged sentence bottoms out at `eps^s`.
pub fn lexical_diversity(x: &TokenSeq, x0: &TokenSeq, s: f64, eps: f64) -> Result<f64> {
    let overlap = bleu(x, &[x0], DEFAULT_MAX_N, 0.0)?;
    Ok((1.0 - overlap).clamp(eps, 1.0).powf(s))
}

/// Same, against a precomputed source profile for the search hot path.
pub fn lexical_diversity_against(
    x: &TokenSeq,
    x0: &NgramProfile,
    s: f64,
    eps: f64,
) -> Result<f64> {
    let overlap = bleu_against(x, &[x0], DEFAULT_MAX_N, 0.0)?;
    Ok((1.0 - overlap).clamp(eps, 1.0).powf(s))
}

/// One output's scores in a corpus evaluation.
#[derive(Clone, Copy, Debug)]
pub struct EvalRow {
    pub id: usize,
    pub bleu: f64,
    pub ibleu: f64,
}

/// Per-sentence rows plus their arithmetic means.
#[derive(Clone, Debug)]
pub struct CorpusEval {
    pub rows: Vec<EvalRow>,
    pub mean_bleu: f64,
    pub mean_ibleu: f64,
}

impl CorpusEval {
    /// `id,bleu,ibleu` rows followed by `mean` and `mean_percent` summary
    /// rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,bleu,ibleu\n");
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.id, row.bleu, row.ibleu).expect("string write");
        }
        writeln!(out, "mean,{},{}", self.mean_bleu, self.mean_ibleu).expect("string write");
        writeln!(
            out,
            "mean_percent,{},{}",
            self.mean_bleu * 100.0,
            self.mean_ibleu * 100.0
        )
        .expect("string write");
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Score aligned outputs against references and sources. Row `i` holds
/// smoothed BLEU-4 of `outputs[i]` vs `refs[i]` and its iBLEU with
/// `sources[i]` as the source.
pub fn evaluate_corpus(
    outputs: &[TokenSeq],
    refs: &[TokenSeq],
    sources: &[TokenSeq],
    alpha: f64,
) -> Result<CorpusEval> {
    if outputs.len() != refs.len() {
        return Err(Error::LengthMismatch {
            left: outputs.len(),
            right: refs.len(),
        });
    }
    if outputs.len() != sources.len() {
        return Err(Error::LengthMismatch {
            left: outputs.len(),
            right: sources.len(),
        });
    }
    if outputs.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let rows: Vec<EvalRow> = outputs
        .iter()
        .zip(refs)
        .zip(sources)
        .enumerate()
        .map(|(id, ((out, rf), src))| {
            Ok(EvalRow {
                id,
                bleu: bleu(out, &[rf], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?,
                ibleu: ibleu(out, rf, src, alpha)?,
            })
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let mean_bleu = rows.iter().map(|r| r.bleu).sum::<f64>() / n;
    let mean_ibleu = rows.iter().map(|r| r.ibleu).sum::<f64>() / n;
    Ok(CorpusEval {
        rows,
        mean_bleu,
        mean_ibleu,
    })
}
