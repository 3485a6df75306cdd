//! The simulated annealing loop: operation, position, and word sampling,
//! the acceptance rule, the linear temperature schedule, and batch search.
//!
//! Each search owns a single seeded RNG stream. A step draws in a fixed
//! order: the edit operation (with one renormalized redraw over insert and
//! replace when the state sits at the minimum length and delete comes up),
//! the position, the word for insert or replace, and the acceptance
//! uniform. Word proposals rank the top-K vocabulary words under both
//! language models, add the source sentence's words back in as copy
//! candidates, and draw proportionally to the base objective score of each
//! induced sentence. The acceptance test may run a different, combined
//! objective; proposals never do.
//!
//! Batch search gives input `i` the seed `base_seed + i` and runs items
//! independently, so results are bit-identical no matter the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{TokenId, TokenSeq};
use crate::error::{Error, Result};
use crate::lm::{copy_augment, topk_candidates};
use crate::objective::{BaseObjective, BasePrepared, Objective};
use crate::trajectory::{TrajOp, TrajStep, Trajectory};

/// Search hyperparameters.
#[derive(Clone, Debug)]
pub struct SaConfig {
    /// Sampling steps per search.
    pub steps: usize,
    /// Starting temperature.
    pub t_init: f64,
    /// Linear cooling rate per step.
    pub anneal_rate_c: f64,
    /// Language-model candidates ranked per word proposal.
    pub top_k: usize,
    /// Draw weights for insert, replace, delete, in that order.
    pub op_probs: [f64; 3],
    /// States never shrink below this length.
    pub min_len: usize,
    /// Base RNG seed; batch item `i` runs at `seed + i`.
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            steps: 100,
            t_init: 3e-2,
            anneal_rate_c: 3e-4,
            top_k: 25,
            op_probs: [1.0 / 3.0; 3],
            min_len: 1,
            seed: 0,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_init.is_finite() && self.t_init > 0.0) {
            return Err(Error::Config(format!(
                "t_init must be positive, got {}",
                self.t_init
            )));
        }
        if !(self.anneal_rate_c.is_finite() && self.anneal_rate_c >= 0.0) {
            return Err(Error::Config(format!(
                "anneal_rate_c must be non-negative, got {}",
                self.anneal_rate_c
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.min_len == 0 {
            return Err(Error::Config("min_len must be at least 1".into()));
        }
        if self.op_probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config(format!(
                "op_probs must be non-negative, got {:?}",
                self.op_probs
            )));
        }
        let sum: f64 = self.op_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "op_probs must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// The three sentence edits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditOp {
    Insert,
    Replace,
    Delete,
}

impl From<EditOp> for TrajOp {
    fn from(op: EditOp) -> TrajOp {
        match op {
            EditOp::Insert => TrajOp::Insert,
            EditOp::Replace => TrajOp::Replace,
            EditOp::Delete => TrajOp::Delete,
        }
    }
}

/// One candidate edit: the induced sentence, and for insert/replace the
/// drawn word with the normalizer of its selection distribution.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub op: EditOp,
    pub position: usize,
    pub candidate: TokenSeq,
    pub word: Option<TokenId>,
    pub z: Option<f64>,
}

/// `max(t_init - anneal_rate_c * t, 0)`.
pub fn temperature(t: usize, cfg: &SaConfig) -> f64 {
    (cfg.t_init - cfg.anneal_rate_c * t as f64).max(0.0)
}

/// `min(1, exp((f_new - f_old) / t))`; at `t = 0`, steps down to accepting
/// exactly the non-worsening moves (ties pass, as the limit of exp(0/t)).
pub fn accept_prob(f_new: f64, f_old: f64, t: f64) -> f64 {
    if t > 0.0 {
        ((f_new - f_old) / t).exp().min(1.0)
    } else if f_new >= f_old {
        1.0
    } else {
        0.0
    }
}

/// Draw an index with probability proportional to its weight. Rejects
/// empty, negative, non-finite, and all-zero weight vectors.
pub fn sample_categorical(weights: &[f64], rng: &mut impl Rng) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::EmptyCandidateSet);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyCandidateSet);
    }
    let r = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if r < cum {
            return Ok(i);
        }
    }
    Ok(weights
        .iter()
        .rposition(|w| *w > 0.0)
        .expect("positive total implies a positive weight"))
}

/// Categorical draw over the three edits. Drawing delete at the minimum
/// length redraws once over insert and replace, renormalized;
/// [`Error::DegenerateOps`] when those two carry no probability mass
/// either.
pub fn sample_op(cfg: &SaConfig, current_len: usize, rng: &mut impl Rng) -> Result<EditOp> {
    const OPS: [EditOp; 3] = [EditOp::Insert, EditOp::Replace, EditOp::Delete];
    let idx = sample_categorical(&cfg.op_probs, rng).map_err(|_| Error::DegenerateOps)?;
    let op = OPS[idx];
    if op == EditOp::Delete && current_len <= cfg.min_len {
        let idx =
            sample_categorical(&cfg.op_probs[..2], rng).map_err(|_| Error::DegenerateOps)?;
        return Ok(OPS[idx]);
    }
    Ok(op)
}

/// Uniform position draw: one of the `l` tokens for replace/delete, one of
/// the `l + 1` slots for insert. `x` must be non-empty.
pub fn sample_position(x: &TokenSeq, op: EditOp, rng: &mut impl Rng) -> usize {
    let l = x.len();
    assert!(l > 0, "cannot sample an edit position in an empty sentence");
    match op {
        EditOp::Insert => rng.gen_range(0..=l),
        EditOp::Replace | EditOp::Delete => rng.gen_range(0..l),
    }
}

/// Build the candidate for `(op, pos)`. Delete is deterministic; insert
/// and replace draw the word from the copy-augmented top-K pool with
/// probability proportional to the base objective score of the induced
/// sentence.
pub fn propose(
    x: &TokenSeq,
    x0: &TokenSeq,
    pos: usize,
    op: EditOp,
    base: &BasePrepared<'_>,
    objective: &BaseObjective<'_>,
    top_k: usize,
    rng: &mut impl Rng,
) -> Result<Proposal> {
    let models = objective.models();
    if op == EditOp::Delete {
        if pos >= x.len() {
            return Err(Error::InvalidPosition {
                position: pos,
                len: x.len(),
                mode: "delete",
            });
        }
        return Ok(Proposal {
            op,
            position: pos,
            candidate: x.with_delete(pos),
            word: None,
            z: None,
        });
    }

    let insert = op == EditOp::Insert;
    let ranked = topk_candidates(
        &models.lm_fwd,
        &models.lm_bwd,
        x,
        pos,
        insert,
        top_k,
        &models.vocab,
    )?;
    let pool = copy_augment(ranked, x0);
    if pool.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let candidates: Vec<TokenSeq> = pool
        .iter()
        .map(|&w| {
            if insert {
                x.with_insert(pos, w)
            } else {
                x.with_replace(pos, w)
            }
        })
        .collect();
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| {
            use crate::objective::PreparedObjective;
            base.eval(c)
        })
        .collect::<Result<_>>()?;
    let chosen = sample_categorical(&scores, rng)?;
    Ok(Proposal {
        op,
        position: pos,
        candidate: candidates[chosen].clone(),
        word: Some(pool[chosen]),
        z: Some(scores.iter().sum()),
    })
}

/// A finished search: the best accepted state, the last accepted state,
/// and the full step record.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub output: TokenSeq,
    pub output_score: f64,
    pub final_state: TokenSeq,
    pub final_score: f64,
    pub trajectory: Trajectory,
}

/// Anneal one sentence. `acceptance` scores states for the accept/reject
/// test (pass the base objective itself for an unguided run);
/// `base` always drives word proposals. Fully deterministic in
/// `(x0, models, cfg)`.
pub fn search(
    x0: &TokenSeq,
    acceptance: &dyn Objective,
    base: &BaseObjective<'_>,
    cfg: &SaConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let accept_prep = acceptance.prepare(x0)?;
    let base_prep = base.prepare_base(x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let f0 = accept_prep.eval(x0)?;
    let mut steps = vec![TrajStep {
        step: 0,
        op: TrajOp::Init,
        accepted: true,
        state: x0.clone(),
        score: f0,
    }];
    let mut current = x0.clone();
    let mut f_cur = f0;
    let mut best = x0.clone();
    let mut f_best = f0;

    for t in 0..cfg.steps {
        let temp = temperature(t, cfg);
        let op = sample_op(cfg, current.len(), &mut rng)?;
        let pos = sample_position(&current, op, &mut rng);
        let proposal = propose(&current, x0, pos, op, &base_prep, base, cfg.top_k, &mut rng)?;
        let f_new = accept_prep.eval(&proposal.candidate)?;
        let accepted = rng.gen::<f64>() < accept_prob(f_new, f_cur, temp);
        steps.push(TrajStep {
            step: t + 1,
            op: proposal.op.into(),
            accepted,
            state: proposal.candidate.clone(),
            score: f_new,
        });
        if accepted {
            current = proposal.candidate;
            f_cur = f_new;
            if f_new > f_best {
                best = current.clone();
                f_best = f_new;
            }
        }
    }

    Ok(SearchResult {
        output: best,
        output_score: f_best,
        final_state: current,
        final_score: f_cur,
        trajectory: Trajectory { id: 0, steps },
    })
}

/// Search every input independently: item `i` runs under `cfg.seed + i`
/// and its trajectory id is `i`. `jobs` sizes a private thread pool (0
/// means one thread per core); outputs keep input order and are identical
/// for every `jobs` value.
pub fn search_batch(
    inputs: &[TokenSeq],
    acceptance: &dyn Objective,
    base: &BaseObjective<'_>,
    cfg: &SaConfig,
    jobs: usize,
) -> Result<Vec<SearchResult>> {
    cfg.validate()?;
    let run = || {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, x0)| {
                let mut item_cfg = cfg.clone();
                item_cfg.seed = cfg.seed.wrapping_add(i as u64);
                let mut result = search(x0, acceptance, base, &item_cfg)?;
                result.trajectory.id = i as u64;
                Ok(result)
            })
            .collect::<Result<Vec<_>>>()
    };
    if jobs == 1 {
        return inputs
            .iter()
            .enumerate()
            .map(|(i, x0)| {
                let mut item_cfg = cfg.clone();
                item_cfg.seed = cfg.seed.wrapping_add(i as u64);
                let mut result = search(x0, acceptance, base, &item_cfg)?;
                result.trajectory.id = i as u64;
                Ok(result)
            })
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))?;
    pool.install(run)
}
