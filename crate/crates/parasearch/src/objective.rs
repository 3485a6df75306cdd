//! The composite scoring function and its surrogate-combined variants.
//!
//! A candidate `x` scores against its source `x0` as
//!
//! ```text
//! f(x | x0) = score_scale * flu(x) * key(x, x0)^P * sen(x, x0)^Q * lex(x, x0)^S
//! ```
//!
//! where `flu` is the forward language model's sentence probability, `key`
//! and `sen` are the keyword and sentence similarities (clamped into
//! `[eps_clamp, 1]` before exponentiation), and `lex` is `1 -` the
//! unsmoothed BLEU overlap with the source (same clamp). The factor product
//! runs in log space and is exponentiated once; acceptance decisions
//! elsewhere difference the raw totals.
//!
//! [`combine_value`] and [`combine_s2s`] blend any learned scorer with the
//! base objective as `k * g + (1 - k) * f` (the emission variant scales `g`
//! by `d` first). The blend changes acceptance only; proposal sampling
//! always uses base components.

use crate::corpus::{TokenSeq, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::{Direction, NGramLm};
use crate::metrics::{lexical_diversity_against, NgramProfile, DEFAULT_MAX_N};
use crate::semantics::{
    cosine, extract_keywords, EmbeddingTable, KeywordSet, SemanticScorer, StopwordSet,
};

/// Exponents and scale of the composite score.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveConfig {
    /// Keyword similarity exponent.
    pub p: f64,
    /// Sentence similarity exponent.
    pub q: f64,
    /// Lexical diversity exponent.
    pub s: f64,
    /// Overall multiplier on the product.
    pub score_scale: f64,
    /// Lower clamp on similarity factors and the diversity base.
    pub eps_clamp: f64,
    /// Keyword similarity floor when the candidate has no embeddable words.
    pub eps_key: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            p: 8.0,
            q: 1.0,
            s: 1.0,
            score_scale: 1.0,
            eps_clamp: 1e-4,
            eps_key: 1e-4,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q), ("s", self.s)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "objective exponent {name} must be a finite non-negative number, got {v}"
                )));
            }
        }
        if !(self.score_scale.is_finite() && self.score_scale > 0.0) {
            return Err(Error::Config(format!(
                "score_scale must be positive, got {}",
                self.score_scale
            )));
        }
        for (name, v) in [("eps_clamp", self.eps_clamp), ("eps_key", self.eps_key)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Blend weight and emission scale for the combined objectives.
#[derive(Clone, Copy, Debug)]
pub struct CombineConfig {
    /// Weight on the learned term; 0 is the base objective alone.
    pub k: f64,
    /// Multiplier on emission probabilities in the sequence-model blend.
    pub d: f64,
}

impl Default for CombineConfig {
    fn default() -> Self {
        CombineConfig { k: 0.0, d: 100.0 }
    }
}

impl CombineConfig {
    pub fn validate(&self) -> Result<()> {
        validate_k(self.k)?;
        validate_d(self.d)
    }
}

fn validate_k(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Config(format!(
            "combination weight k must lie in [0, 1], got {k}"
        )));
    }
    Ok(())
}

fn validate_d(d: f64) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Config(format!(
            "emission scale d must be positive, got {d}"
        )));
    }
    Ok(())
}

/// Everything the scoring function reads: vocabulary, both language
/// models, embeddings pre-indexed by token id, and the stopword list.
#[derive(Clone, Debug)]
pub struct ModelSet {
    pub vocab: Vocabulary,
    pub lm_fwd: NGramLm,
    pub lm_bwd: NGramLm,
    pub scorer: SemanticScorer,
    pub stopwords: StopwordSet,
}

impl ModelSet {
    pub fn new(
        vocab: Vocabulary,
        lm_fwd: NGramLm,
        lm_bwd: NGramLm,
        embeddings: &EmbeddingTable,
        stopwords: StopwordSet,
    ) -> Result<Self> {
        if lm_fwd.direction() != Direction::Forward {
            return Err(Error::Config(
                "forward slot holds a backward language model".into(),
            ));
        }
        if lm_bwd.direction() != Direction::Backward {
            return Err(Error::Config(
                "backward slot holds a forward language model".into(),
            ));
        }
        let scorer = SemanticScorer::new(embeddings, &vocab);
        Ok(ModelSet {
            vocab,
            lm_fwd,
            lm_bwd,
            scorer,
            stopwords,
        })
    }
}

/// Per-factor view of one evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ScoreBreakdown {
    /// Sentence probability under the forward language model, unclamped.
    pub flu: f64,
    /// Keyword similarity after clamping, before the `P` power.
    pub sem_key: f64,
    /// Sentence similarity after clamping, before the `Q` power.
    pub sem_sen: f64,
    /// Lexical diversity with its `S` power already applied.
    pub lex: f64,
    /// Source keywords that had no embedding and dropped out.
    pub skipped_keywords: usize,
    /// `score_scale * flu * sem_key^P * sem_sen^Q * lex`.
    pub total: f64,
}

/// A scoring function over candidate states, instantiated per source
/// sentence.
pub trait Objective: Sync {
    fn prepare<'a>(&'a self, x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn prepare<'a>(&'a self, x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>> {
        (**self).prepare(x0)
    }
}

/// An objective bound to one source sentence, with the source-side work
/// (keywords, n-gram profile, mean vector) done once.
pub trait PreparedObjective {
    fn eval(&self, x: &TokenSeq) -> Result<f64>;
}

/// The heuristic composite objective.
#[derive(Clone, Copy, Debug)]
pub struct BaseObjective<'m> {
    models: &'m ModelSet,
    cfg: ObjectiveConfig,
}

impl<'m> BaseObjective<'m> {
    pub fn new(models: &'m ModelSet, cfg: ObjectiveConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BaseObjective { models, cfg })
    }

    pub fn models(&self) -> &'m ModelSet {
        self.models
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    /// The concrete prepared form, exposing [`BasePrepared::breakdown`].
    pub fn prepare_base(&self, x0: &TokenSeq) -> Result<BasePrepared<'m>> {
        if x0.is_empty() {
            return Err(Error::EmptyInput("source sentence"));
        }
        let keywords = extract_keywords(x0, &self.models.stopwords, &self.models.vocab);
        let x0_profile = NgramProfile::new(x0, DEFAULT_MAX_N);
        let x0_mean = self.models.scorer.mean_vector(x0);
        Ok(BasePrepared {
            models: self.models,
            cfg: self.cfg,
            keywords,
            x0_profile,
            x0_mean,
        })
    }
}

impl Objective for BaseObjective<'_> {
    fn prepare<'a>(&'a self, x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>> {
        Ok(Box::new(self.prepare_base(x0)?))
    }
}

/// [`BaseObjective`] bound to one source sentence.
pub struct BasePrepared<'m> {
    models: &'m ModelSet,
    cfg: ObjectiveConfig,
    keywords: KeywordSet,
    x0_profile: NgramProfile,
    x0_mean: Option<Vec<f64>>,
}

impl BasePrepared<'_> {
    pub fn keywords(&self) -> &KeywordSet {
        &self.keywords
    }

    /// Evaluate every factor of the composite score on `x`.
    pub fn breakdown(&self, x: &TokenSeq) -> Result<ScoreBreakdown> {
        if x.is_empty() {
            return Err(Error::EmptyInput("candidate sentence"));
        }
        let cfg = &self.cfg;
        let flu = self.models.lm_fwd.fluency(x);
        let (key_raw, skipped_keywords) =
            self.models
                .scorer
                .keyword_sim(x, &self.keywords, cfg.eps_key);
        let sem_key = key_raw.clamp(cfg.eps_clamp, 1.0);
        let x_mean = self.models.scorer.mean_vector(x).ok_or(Error::ZeroVector)?;
        let x0_mean = self.x0_mean.as_ref().ok_or(Error::ZeroVector)?;
        let sem_sen = cosine(&x_mean, x0_mean)?.clamp(cfg.eps_clamp, 1.0);
        let lex = lexical_diversity_against(x, &self.x0_profile, cfg.s, cfg.eps_clamp)?;
        let log_total = cfg.score_scale.ln()
            + flu.ln()
            + cfg.p * sem_key.ln()
            + cfg.q * sem_sen.ln()
            + lex.ln();
        Ok(ScoreBreakdown {
            flu,
            sem_key,
            sem_sen,
            lex,
            skipped_keywords,
            total: log_total.exp(),
        })
    }
}

impl PreparedObjective for BasePrepared<'_> {
    fn eval(&self, x: &TokenSeq) -> Result<f64> {
        Ok(self.breakdown(x)?.total)
    }
}

/// Score one candidate against one source in a single call.
pub fn score(
    x: &TokenSeq,
    x0: &TokenSeq,
    models: &ModelSet,
    cfg: ObjectiveConfig,
) -> Result<ScoreBreakdown> {
    BaseObjective::new(models, cfg)?.prepare_base(x0)?.breakdown(x)
}

/// `k * scale * g + (1 - k) * f` over a learned scorer `g` and the base
/// objective `f`.
pub struct Combined<'m, S> {
    base: BaseObjective<'m>,
    learned: S,
    k: f64,
    scale: f64,
}

impl<'m, S> Combined<'m, S> {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn base(&self) -> &BaseObjective<'m> {
        &self.base
    }
}

/// Blend a value-style regressor with the base objective:
/// `k * g(x | x0) + (1 - k) * f(x | x0)`.
pub fn combine_value<'m, S: Objective>(
    base: BaseObjective<'m>,
    learned: S,
    k: f64,
) -> Result<Combined<'m, S>> {
    validate_k(k)?;
    Ok(Combined {
        base,
        learned,
        k,
        scale: 1.0,
    })
}

/// Blend an emission probability model with the base objective:
/// `k * d * g(x | x0) + (1 - k) * f(x | x0)`.
pub fn combine_s2s<'m, S: Objective>(
    base: BaseObjective<'m>,
    emission: S,
    k: f64,
    d: f64,
) -> Result<Combined<'m, S>> {
    validate_k(k)?;
    validate_d(d)?;
    Ok(Combined {
        base,
        learned: emission,
        k,
        scale: d,
    })
}

impl<S: Objective> Objective for Combined<'_, S> {
    fn prepare<'a>(&'a self, x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>> {
        Ok(Box::new(CombinedPrepared {
            base: self.base.prepare_base(x0)?,
            learned: self.learned.prepare(x0)?,
            k: self.k,
            scale: self.scale,
        }))
    }
}

struct CombinedPrepared<'a> {
    base: BasePrepared<'a>,
    learned: Box<dyn PreparedObjective + 'a>,
    k: f64,
    scale: f64,
}

impl PreparedObjective for CombinedPrepared<'_> {
    fn eval(&self, x: &TokenSeq) -> Result<f64> {
        let f = self.base.eval(x)?;
        let g = self.learned.eval(x)?;
        Ok(self.k * self.scale * g + (1.0 - self.k) * f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;
    use crate::lm::{train_lm, LmConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn words(line: &str) -> Vec<String> {
        line.split_whitespace().map(str::to_owned).collect()
    }

    fn tiny_models() -> ModelSet {
        let lines = [
            "the cat sat on the mat",
            "the dog sat on the rug",
            "a cat ran over the rug",
            "the bird flew over the mat",
            "a dog ran to the bird",
        ];
        let sents: Vec<Vec<String>> = lines.iter().map(|l| words(l)).collect();
        let vocab = build_vocab(&sents, 1).unwrap();
        let toks: Vec<TokenSeq> = sents.iter().map(|s| vocab.intern(s)).collect();
        let cfg = LmConfig::default();
        let lm_fwd = train_lm(&toks, &vocab, cfg.clone(), Direction::Forward).unwrap();
        let lm_bwd = train_lm(&toks, &vocab, cfg, Direction::Backward).unwrap();
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in vocab.words() {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            rows.push((vocab.surface(id).to_owned(), v));
        }
        let emb = EmbeddingTable::from_rows(4, rows).unwrap();
        let stop = StopwordSet::from_words(
            ["the", "a", "on", "to", "over"].map(str::to_owned),
        );
        ModelSet::new(vocab, lm_fwd, lm_bwd, &emb, stop).unwrap()
    }

    fn seq(models: &ModelSet, line: &str) -> TokenSeq {
        models.vocab.intern(&words(line))
    }

    #[test]
    fn identity_input_bottoms_out_on_diversity() {
        let models = tiny_models();
        let x0 = seq(&models, "the cat sat on the mat");
        let b = score(&x0, &x0, &models, ObjectiveConfig::default()).unwrap();
        assert!((b.sem_key - 1.0).abs() <= 1e-12);
        assert!((b.sem_sen - 1.0).abs() <= 1e-12);
        assert_eq!(b.lex, 1e-4);
        assert_eq!(b.skipped_keywords, 0);
        let expected = b.flu * 1e-4;
        assert!((b.total - expected).abs() <= expected * 1e-9);
    }

    #[test]
    fn zero_powers_collapse_to_scaled_fluency() {
        let models = tiny_models();
        let cfg = ObjectiveConfig {
            p: 0.0,
            q: 0.0,
            s: 0.0,
            score_scale: 2.5,
            ..ObjectiveConfig::default()
        };
        let x0 = seq(&models, "the cat sat on the mat");
        let x = seq(&models, "a dog ran to the bird");
        let b = score(&x, &x0, &models, cfg).unwrap();
        let expected = 2.5 * models.lm_fwd.fluency(&x);
        assert!((b.total - expected).abs() <= expected * 1e-12);
    }

    #[test]
    fn total_recomposes_from_components() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let base = BaseObjective::new(&models, cfg).unwrap();
        let x0 = seq(&models, "the dog sat on the rug");
        let prepared = base.prepare_base(&x0).unwrap();
        let pool: Vec<_> = models.vocab.words().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let len = rng.gen_range(1..=8);
            let x = TokenSeq((0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect());
            let b = prepared.breakdown(&x).unwrap();
            let direct =
                cfg.score_scale * b.flu * b.sem_key.powf(cfg.p) * b.sem_sen.powf(cfg.q) * b.lex;
            assert!(
                (b.total - direct).abs() <= direct.abs() * 1e-12,
                "log-domain total {} drifted from direct product {direct}",
                b.total
            );
        }
    }

    #[test]
    fn components_match_their_standalone_modules() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let x0 = seq(&models, "the cat sat on the mat");
        let x = seq(&models, "a cat ran over the rug");
        let b = score(&x, &x0, &models, cfg).unwrap();

        assert_eq!(b.flu, models.lm_fwd.fluency(&x));
        let kws = extract_keywords(&x0, &models.stopwords, &models.vocab);
        let (key_raw, _) = models.scorer.keyword_sim(&x, &kws, cfg.eps_key);
        assert_eq!(b.sem_key, key_raw.clamp(cfg.eps_clamp, 1.0));
        assert_eq!(
            b.sem_sen,
            models
                .scorer
                .sentence_sim(&x, &x0)
                .unwrap()
                .clamp(cfg.eps_clamp, 1.0)
        );
        assert_eq!(
            b.lex,
            crate::metrics::lexical_diversity(&x, &x0, cfg.s, cfg.eps_clamp).unwrap()
        );
        let direct = b.flu * b.sem_key.powf(cfg.p) * b.sem_sen.powf(cfg.q) * b.lex;
        assert!((b.total - direct).abs() <= direct * 1e-12);
    }

    #[test]
    fn scale_shifts_totals_but_not_ranking() {
        let models = tiny_models();
        let x0 = seq(&models, "the cat sat on the mat");
        let candidates = [
            "a cat ran over the rug",
            "the dog sat on the rug",
            "the bird flew over the mat",
            "a dog ran to the bird",
        ];
        let score_at = |scale: f64| -> Vec<f64> {
            let cfg = ObjectiveConfig {
                score_scale: scale,
                ..ObjectiveConfig::default()
            };
            candidates
                .iter()
                .map(|c| score(&seq(&models, c), &x0, &models, cfg).unwrap().total)
                .collect()
        };
        let at_one = score_at(1.0);
        let at_scaled = score_at(7.5);
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_eq!(argmax(&at_one), argmax(&at_scaled));
        for (a, b) in at_one.iter().zip(&at_scaled) {
            assert!((b / a - 7.5).abs() < 1e-9);
        }
    }

    struct Fixed(f64);

    struct FixedPrepared(f64);

    impl Objective for Fixed {
        fn prepare<'a>(&'a self, _x0: &TokenSeq) -> Result<Box<dyn PreparedObjective + 'a>> {
            Ok(Box::new(FixedPrepared(self.0)))
        }
    }

    impl PreparedObjective for FixedPrepared {
        fn eval(&self, _x: &TokenSeq) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn combined_objective_is_affine_in_k() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let x0 = seq(&models, "the cat sat on the mat");
        let x = seq(&models, "the dog sat on the rug");
        let f = score(&x, &x0, &models, cfg).unwrap().total;
        let g = 0.37;
        for k in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let base = BaseObjective::new(&models, cfg).unwrap();
            let combined = combine_value(base, Fixed(g), k).unwrap();
            let got = combined.prepare(&x0).unwrap().eval(&x).unwrap();
            let expected = k * g + (1.0 - k) * f;
            assert!(
                (got - expected).abs() <= 1e-12,
                "k={k}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn zero_weight_reproduces_base_bit_for_bit() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let x0 = seq(&models, "the cat sat on the mat");
        let base = BaseObjective::new(&models, cfg).unwrap();
        let combined = combine_value(BaseObjective::new(&models, cfg).unwrap(), Fixed(123.456), 0.0)
            .unwrap();
        let base_prep = base.prepare(&x0).unwrap();
        let comb_prep = combined.prepare(&x0).unwrap();
        let pool: Vec<_> = models.vocab.words().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let len = rng.gen_range(1..=8);
            let x = TokenSeq((0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect());
            let a = base_prep.eval(&x).unwrap();
            let b = comb_prep.eval(&x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn combination_arithmetic_and_validation() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let x0 = seq(&models, "the cat sat on the mat");
        let x = seq(&models, "a dog ran to the bird");

        // Force a known base value through the fixed stub on both sides by
        // checking the formula directly instead.
        let base = BaseObjective::new(&models, cfg).unwrap();
        let f = base.prepare(&x0).unwrap().eval(&x).unwrap();

        let half = combine_value(base, Fixed(0.4), 0.5).unwrap();
        let got = half.prepare(&x0).unwrap().eval(&x).unwrap();
        assert!((got - (0.5 * 0.4 + 0.5 * f)).abs() < 1e-15);

        let s2s = combine_s2s(
            BaseObjective::new(&models, cfg).unwrap(),
            Fixed(0.004),
            1.0,
            100.0,
        )
        .unwrap();
        let got = s2s.prepare(&x0).unwrap().eval(&x).unwrap();
        assert!((got - 0.4).abs() < 1e-12);

        let base = BaseObjective::new(&models, cfg).unwrap();
        assert!(matches!(
            combine_value(base, Fixed(0.0), 1.2),
            Err(Error::Config(_))
        ));
        let base = BaseObjective::new(&models, cfg).unwrap();
        assert!(matches!(
            combine_s2s(base, Fixed(0.0), 0.5, 0.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_and_model_validation() {
        assert!(ObjectiveConfig::default().validate().is_ok());
        let bad = ObjectiveConfig {
            p: -1.0,
            ..ObjectiveConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ObjectiveConfig {
            score_scale: 0.0,
            ..ObjectiveConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(CombineConfig::default().validate().is_ok());
        assert!(CombineConfig { k: -0.1, d: 100.0 }.validate().is_err());

        let models = tiny_models();
        let swapped = ModelSet::new(
            models.vocab.clone(),
            models.lm_bwd.clone(),
            models.lm_fwd.clone(),
            &EmbeddingTable::from_rows(1, vec![("x".into(), vec![1.0])]).unwrap(),
            StopwordSet::default(),
        );
        assert!(matches!(swapped, Err(Error::Config(_))));
    }

    #[test]
    fn empty_sentences_are_rejected() {
        let models = tiny_models();
        let cfg = ObjectiveConfig::default();
        let x0 = seq(&models, "the cat sat on the mat");
        let empty = TokenSeq(vec![]);
        assert!(matches!(
            score(&empty, &x0, &models, cfg),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            score(&x0, &empty, &models, cfg),
            Err(Error::EmptyInput(_))
        ));
    }
}
