//! Fixed-order feature extraction for the value regressors, plus the
//! frozen standardization applied before the network sees anything.

use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::metrics::{bleu_against, NgramProfile, DEFAULT_MAX_N, DEFAULT_SMOOTH_K};
use crate::objective::ModelSet;
use crate::semantics::{extract_keywords, KeywordSet};

pub const FEATURE_DIM: usize = 8;

const KEYWORD_FLOOR: f64 = 1e-4;

/// Source-side work shared by every featurization against the same `x0`:
/// its keywords, n-gram profile, and length.
pub struct FeatureContext<'m> {
    models: &'m ModelSet,
    keywords: KeywordSet,
    x0_profile: NgramProfile,
    x0: TokenSeq,
}

impl<'m> FeatureContext<'m> {
    pub fn new(models: &'m ModelSet, x0: &TokenSeq) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::EmptyInput("source sentence"));
        }
        Ok(FeatureContext {
            models,
            keywords: extract_keywords(x0, &models.stopwords, &models.vocab),
            x0_profile: NgramProfile::new(x0, DEFAULT_MAX_N),
            x0: x0.clone(),
        })
    }

    /// The feature vector of `x` against this context, in fixed order:
    /// log-fluency of `x`, keyword similarity, sentence similarity,
    /// smoothed BLEU against the source, length ratio, normalized token
    /// edit distance, source-keyword coverage, and a constant 1 bias.
    pub fn features(&self, x: &TokenSeq) -> Result<[f64; FEATURE_DIM]> {
        if x.is_empty() {
            return Err(Error::EmptyInput("candidate sentence"));
        }
        let models = self.models;
        let log_flu = models.lm_fwd.log_prob(x);
        let (keyword, _) = models.scorer.keyword_sim(x, &self.keywords, KEYWORD_FLOOR);
        let sentence = models.scorer.sentence_sim(x, &self.x0)?;
        let overlap = bleu_against(x, &[&self.x0_profile], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?;
        let len_ratio = x.len() as f64 / self.x0.len() as f64;
        let edit = levenshtein(x.as_slice(), self.x0.as_slice()) as f64
            / x.len().max(self.x0.len()) as f64;
        let coverage = if self.keywords.is_empty() {
            1.0
        } else {
            let present = self
                .keywords
                .ids
                .iter()
                .filter(|kw| x.as_slice().contains(kw))
                .count();
            present as f64 / self.keywords.len() as f64
        };
        let out = [
            log_flu, keyword, sentence, overlap, len_ratio, edit, coverage, 1.0,
        ];
        if let Some(bad) = out.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite feature value {bad}"
            )));
        }
        Ok(out)
    }
}

/// One-shot featurization; prefer [`FeatureContext`] when scoring many
/// states against the same source.
pub fn featurize(
    x0: &TokenSeq,
    x: &TokenSeq,
    models: &ModelSet,
) -> Result<[f64; FEATURE_DIM]> {
    FeatureContext::new(models, x0)?.features(x)
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Per-feature shift and scale, fitted once on the training set and
/// frozen into the model. A feature with (population) standard deviation
/// under 1e-12 passes through untransformed, which keeps the constant
/// bias column alive.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl Standardizer {
    pub fn fit(rows: &[[f64; FEATURE_DIM]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; FEATURE_DIM];
        for row in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(row) {
                *v += (x - m) * (x - m);
            }
        }
        let mut std = [0.0; FEATURE_DIM];
        for (s, v) in std.iter_mut().zip(&var) {
            *s = (v / n).sqrt();
        }
        Ok(Standardizer { mean, std })
    }

    pub fn transform(&self, row: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = *row;
        for ((v, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std) {
            if *s >= 1e-12 {
                *v = (*v - m) / s;
            }
        }
        out
    }
}
