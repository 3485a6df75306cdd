//! Diagnostics over recorded searches: rank correlation of objective
//! scores with BLEU and iBLEU, acceptance ratios, local-minimum escape
//! counting, and the mixture-weight sweep that ties them together.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::annealing::{search_batch, SaConfig};
use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::metrics::{bleu, ibleu, DEFAULT_MAX_N, DEFAULT_SMOOTH_K};
use crate::objective::{combine_s2s, combine_value, BaseObjective, Objective};
use crate::surrogate::SurrogateKind;
use crate::trajectory::{save_trajectories, TrajStep, Trajectory};

/// Tie-averaged ranks of `values`, 1-based: equal values share the mean
/// of the positions they occupy, so the ranks always sum to n(n+1)/2.
pub fn rank_vector(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation: the Pearson coefficient of the tie-averaged rank
/// vectors of `a` and `b`, clamped into `[-1, 1]` so rounding in the
/// normalization can never push a perfect correlation out of bounds.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "rank correlation needs at least two points, got {}",
            a.len()
        )));
    }
    for (side, v) in [("left", a), ("right", b)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite value in the {side} vector"
            )));
        }
        let (min, max) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(*x), hi.max(*x))
            });
        if min == max {
            return Err(Error::DegenerateInput(format!(
                "the {side} vector is constant; ranks carry no information"
            )));
        }
    }
    let ra = rank_vector(a);
    let rb = rank_vector(b);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// Accepted proposals per 100 sampling steps, averaged over trajectories.
/// The recorded starting state is not a proposal and does not count.
pub fn acceptance_ratio(trajs: &[Trajectory]) -> Result<f64> {
    if trajs.is_empty() {
        return Err(Error::EmptyInput("trajectory set"));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for traj in trajs {
        let sampling = traj.steps.len().saturating_sub(1);
        if sampling == 0 {
            continue;
        }
        let accepted = traj.steps[1..].iter().filter(|s| s.accepted).count();
        total += 100.0 * accepted as f64 / sampling as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::DegenerateInput(
            "no trajectory has any sampling steps".into(),
        ));
    }
    Ok(total / counted as f64)
}

/// Interior indices scoring strictly below both neighbors. Plateaus do
/// not qualify.
pub fn find_local_minima(scores: &[f64]) -> Vec<usize> {
    (1..scores.len().saturating_sub(1))
        .filter(|&t| scores[t] < scores[t - 1] && scores[t] < scores[t + 1])
        .collect()
}

/// How often a score path dipped into a local minimum and later climbed
/// past the level it held just before the dip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeCount {
    pub escapes: usize,
    /// `escapes` normalized by the path length, times 100.
    pub per_hundred: f64,
}

/// A minimum at `t` counts as escaped iff some later score strictly
/// exceeds `scores[t - 1]`, the level immediately before the dip.
pub fn count_escapes(scores: &[f64]) -> EscapeCount {
    let escapes = find_local_minima(scores)
        .into_iter()
        .filter(|&t| scores[t + 1..].iter().any(|s| *s > scores[t - 1]))
        .count();
    let per_hundred = if scores.is_empty() {
        0.0
    } else {
        100.0 * escapes as f64 / scores.len() as f64
    };
    EscapeCount {
        escapes,
        per_hundred,
    }
}

/// One accepted state re-scored, with its reference metrics.
#[derive(Clone, Debug)]
pub struct StateEval {
    pub traj: u64,
    pub step: usize,
    pub score: f64,
    pub bleu: f64,
    pub ibleu: f64,
}

/// Re-score every accepted state of every trajectory under `objective`,
/// pairing each with smoothed BLEU and iBLEU against `refs[trajectory
/// id]`. The trajectory's own recorded source sentence anchors both the
/// objective and the iBLEU input-dissimilarity term.
pub fn reevaluate(
    trajs: &[Trajectory],
    objective: &dyn Objective,
    refs: &[TokenSeq],
    alpha: f64,
) -> Result<Vec<StateEval>> {
    let mut out = Vec::new();
    for traj in trajs {
        let x0 = traj.x0()?;
        let reference = refs.get(traj.id as usize).ok_or_else(|| {
            Error::Config(format!(
                "trajectory {} has no reference sentence ({} provided)",
                traj.id,
                refs.len()
            ))
        })?;
        let prep = objective.prepare(x0)?;
        for step in traj.accepted_steps() {
            out.push(StateEval {
                traj: traj.id,
                step: step.step,
                score: prep.eval(&step.state)?,
                bleu: bleu(&step.state, &[reference], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?,
                ibleu: ibleu(&step.state, reference, x0, alpha)?,
            });
        }
    }
    Ok(out)
}

/// The score of the state the search was holding at each step, under
/// `objective`: the starting state's score first, then one value per
/// sampling step, re-evaluated only when a proposal was accepted.
pub fn current_score_path(traj: &Trajectory, objective: &dyn Objective) -> Result<Vec<f64>> {
    let x0 = traj.x0()?;
    let prep = objective.prepare(x0)?;
    let mut path = Vec::with_capacity(traj.steps.len());
    let mut current = prep.eval(x0)?;
    path.push(current);
    for step in &traj.steps[1..] {
        if step.accepted {
            current = prep.eval(&step.state)?;
        }
        path.push(current);
    }
    Ok(path)
}

/// The canonical sweep grid: k = 0, 0.1, ..., 1.0.
pub fn default_k_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Settings for [`weight_sweep`].
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub k_grid: Vec<f64>,
    /// iBLEU reference weight.
    pub alpha: f64,
    /// Scale applied to emission probabilities when the surrogate is the
    /// s2s model.
    pub d: f64,
    /// Thread count handed to the batch searches.
    pub jobs: usize,
    /// When set, the guided trajectories of every grid weight are saved
    /// here as `trajs_<kind>_k<k>.tsv` for later audit.
    pub traj_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k_grid: default_k_grid(),
            alpha: 0.9,
            d: 100.0,
            jobs: 1,
            traj_dir: None,
        }
    }
}

/// Every diagnostic at one mixture weight.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub k: f64,
    pub mean_bleu: f64,
    pub mean_ibleu: f64,
    pub spearman_bleu: f64,
    pub spearman_ibleu: f64,
    /// Acceptance ratio of the guided searches (accepted proposals per
    /// 100 steps).
    pub traj_len_per100: f64,
    /// Escapes from local minima of the base objective per 100 steps.
    pub escapes_per100: f64,
}

impl SweepRow {
    /// Column names shared by every sweep-style report.
    pub fn csv_header() -> &'static str {
        "k,mean_bleu,mean_ibleu,spearman_bleu,spearman_ibleu,traj_len_per100,escapes_per100"
    }

    /// The row as one CSV line, no trailing newline.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.k,
            self.mean_bleu,
            self.mean_ibleu,
            self.spearman_bleu,
            self.spearman_ibleu,
            self.traj_len_per100,
            self.escapes_per100
        )
    }
}

/// One row per grid weight, for one surrogate kind.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub kind: SurrogateKind,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# spearman over accepted states only\n");
        out.push_str(SweepRow::csv_header());
        out.push('\n');
        for r in &self.rows {
            writeln!(out, "{}", r.csv_line()).expect("writing to a string cannot fail");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Sweep the mixture weight over `k_grid` for one trained surrogate.
///
/// A baseline batch (acceptance by the plain base objective) runs first
/// under `sa_cfg`'s seeds. Per grid weight k, the baseline's accepted
/// states are re-scored by the k-combined objective and rank-correlated
/// with their fixed BLEU/iBLEU values; then fresh searches run with the
/// combined objective deciding acceptance (same seeds), yielding mean
/// output BLEU/iBLEU, the acceptance ratio, and escapes counted on the
/// base objective's score path.
pub fn weight_sweep(
    inputs: &[TokenSeq],
    refs: &[TokenSeq],
    base: &BaseObjective<'_>,
    sa_cfg: &SaConfig,
    surrogate: &dyn Objective,
    kind: SurrogateKind,
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("sweep inputs"));
    }
    if inputs.len() != refs.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: refs.len(),
        });
    }
    if cfg.k_grid.is_empty() {
        return Err(Error::Config("sweep needs at least one weight".into()));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!(
            "ibleu alpha must lie in [0, 1], got {}",
            cfg.alpha
        )));
    }

    let baseline: Vec<Trajectory> = search_batch(inputs, base, base, sa_cfg, cfg.jobs)?
        .into_iter()
        .map(|r| r.trajectory)
        .collect();

    let mut rows = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        let combined = match kind {
            SurrogateKind::S2s => combine_s2s(*base, surrogate, k, cfg.d)?,
            SurrogateKind::Value | SurrogateKind::MaxValue => {
                combine_value(*base, surrogate, k)?
            }
        };

        let evals = reevaluate(&baseline, &combined, refs, cfg.alpha)?;
        let scores: Vec<f64> = evals.iter().map(|e| e.score).collect();
        let bleus: Vec<f64> = evals.iter().map(|e| e.bleu).collect();
        let ibleus: Vec<f64> = evals.iter().map(|e| e.ibleu).collect();
        let spearman_bleu = spearman(&scores, &bleus)?;
        let spearman_ibleu = spearman(&scores, &ibleus)?;

        let results = search_batch(inputs, &combined, base, sa_cfg, cfg.jobs)?;
        let mut mean_bleu = 0.0;
        let mut mean_ibleu = 0.0;
        let mut escapes = 0.0;
        for (i, r) in results.iter().enumerate() {
            mean_bleu += bleu(&r.output, &[&refs[i]], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?;
            mean_ibleu += ibleu(&r.output, &refs[i], &inputs[i], cfg.alpha)?;
            let path = current_score_path(&r.trajectory, base)?;
            escapes += count_escapes(&path).per_hundred;
        }
        let n = results.len() as f64;
        let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
        if let Some(dir) = &cfg.traj_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(format!("trajs_{kind}_k{k}.tsv"));
            save_trajectories(&trajs, path, &base.models().vocab)?;
        }
        rows.push(SweepRow {
            k,
            mean_bleu: mean_bleu / n,
            mean_ibleu: mean_ibleu / n,
            spearman_bleu,
            spearman_ibleu,
            traj_len_per100: acceptance_ratio(&trajs)?,
            escapes_per100: escapes / n,
        });
    }
    Ok(SweepReport { kind, rows })
}

/// One sweep-style diagnostic row from an existing trajectory set instead
/// of fresh searches. Output quality is measured at each trajectory's best
/// accepted state, correlations re-score every accepted state under
/// `objective`, and escapes count on the base objective's score path.
/// `refs` is indexed by trajectory id. On trajectories recorded with the
/// base objective this reproduces [`weight_sweep`]'s k = 0 row exactly.
pub fn sweep_row_for(
    trajs: &[Trajectory],
    objective: &dyn Objective,
    base: &BaseObjective<'_>,
    refs: &[TokenSeq],
    k: f64,
    alpha: f64,
) -> Result<SweepRow> {
    let evals = reevaluate(trajs, objective, refs, alpha)?;
    let scores: Vec<f64> = evals.iter().map(|e| e.score).collect();
    let bleus: Vec<f64> = evals.iter().map(|e| e.bleu).collect();
    let ibleus: Vec<f64> = evals.iter().map(|e| e.ibleu).collect();
    let spearman_bleu = spearman(&scores, &bleus)?;
    let spearman_ibleu = spearman(&scores, &ibleus)?;

    let mut mean_bleu = 0.0;
    let mut mean_ibleu = 0.0;
    let mut escapes = 0.0;
    for t in trajs {
        let x0 = t.x0()?;
        let mut best: Option<&TrajStep> = None;
        for s in t.accepted_steps() {
            if best.map_or(true, |b| s.score > b.score) {
                best = Some(s);
            }
        }
        let best = best.ok_or_else(|| Error::MalformedTrajectory {
            line: 0,
            reason: format!("trajectory {} has no accepted state", t.id),
        })?;
        let reference = refs.get(t.id as usize).ok_or_else(|| {
            Error::Config(format!(
                "trajectory {} has no reference sentence ({} provided)",
                t.id,
                refs.len()
            ))
        })?;
        mean_bleu += bleu(&best.state, &[reference], DEFAULT_MAX_N, DEFAULT_SMOOTH_K)?;
        mean_ibleu += ibleu(&best.state, reference, x0, alpha)?;
        let path = current_score_path(t, base)?;
        escapes += count_escapes(&path).per_hundred;
    }
    let n = trajs.len() as f64;
    Ok(SweepRow {
        k,
        mean_bleu: mean_bleu / n,
        mean_ibleu: mean_ibleu / n,
        spearman_bleu,
        spearman_ibleu,
        traj_len_per100: acceptance_ratio(trajs)?,
        escapes_per100: escapes / n,
    })
}
