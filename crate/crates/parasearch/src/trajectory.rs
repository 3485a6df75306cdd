//! Search trajectory records: persistence and the labeling passes that
//! turn them into surrogate training data.
//!
//! A trajectory holds every sampling step of one search, rejected
//! proposals included, so acceptance statistics need no re-run. Labels are
//! built from the accepted states only, which form the realized state
//! sequence `x_0 .. x_T`: value labels take each state's own recorded
//! score, max-value labels take the inclusive suffix maximum over the
//! remaining accepted scores, and each trajectory contributes exactly one
//! `(x_0, x_T)` pseudo-pair.
//!
//! The file format is one step per line, tab-separated: trajectory id,
//! step index, operation, accepted flag (`1`/`0`), space-joined tokens,
//! score. Scores print in shortest round-trip decimal form, so a
//! save/load cycle reproduces them bit for bit.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{TokenSeq, Vocabulary};
use crate::error::{Error, Result};

/// Edit recorded at one step; `Init` marks the step-0 starting state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajOp {
    Init,
    Insert,
    Replace,
    Delete,
}

impl fmt::Display for TrajOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajOp::Init => "init",
            TrajOp::Insert => "insert",
            TrajOp::Replace => "replace",
            TrajOp::Delete => "delete",
        })
    }
}

impl FromStr for TrajOp {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "init" => Ok(TrajOp::Init),
            "insert" => Ok(TrajOp::Insert),
            "replace" => Ok(TrajOp::Replace),
            "delete" => Ok(TrajOp::Delete),
            _ => Err(()),
        }
    }
}

/// One sampling step: the state it produced (the proposal itself when
/// rejected) and that state's score under the search's acceptance
/// objective.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajStep {
    pub step: usize,
    pub op: TrajOp,
    pub accepted: bool,
    pub state: TokenSeq,
    pub score: f64,
}

/// All steps of one search, step 0 being the accepted initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub steps: Vec<TrajStep>,
}

/// One surrogate training row: a state from a search over `x0` and its
/// regression target.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub x0: TokenSeq,
    pub x: TokenSeq,
    pub target: f64,
}

/// The source sentence and the final accepted state of one search.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoPair {
    pub x0: TokenSeq,
    pub xt: TokenSeq,
}

impl Trajectory {
    fn check_nonempty(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::MalformedTrajectory {
                line: 0,
                reason: format!("trajectory {} has no steps", self.id),
            });
        }
        Ok(())
    }

    pub fn x0(&self) -> Result<&TokenSeq> {
        self.check_nonempty()?;
        Ok(&self.steps[0].state)
    }

    /// The accepted steps in order: the realized states `x_0 .. x_T`.
    pub fn accepted_steps(&self) -> impl Iterator<Item = &TrajStep> {
        self.steps.iter().filter(|s| s.accepted)
    }

    /// Scores of the realized states in step order.
    pub fn accepted_scores(&self) -> Result<Vec<f64>> {
        self.check_nonempty()?;
        Ok(self.accepted_steps().map(|s| s.score).collect())
    }

    /// One row per accepted state, labeled with its own recorded score.
    pub fn label_value(&self) -> Result<Vec<LabeledExample>> {
        let x0 = self.x0()?.clone();
        Ok(self
            .accepted_steps()
            .map(|s| LabeledExample {
                x0: x0.clone(),
                x: s.state.clone(),
                target: s.score,
            })
            .collect())
    }

    /// One row per accepted state, labeled with the best score reached
    /// from that state onward (the state itself included).
    pub fn label_max_value(&self) -> Result<Vec<LabeledExample>> {
        let mut rows = self.label_value()?;
        let mut running = f64::NEG_INFINITY;
        for row in rows.iter_mut().rev() {
            running = running.max(row.target);
            row.target = running;
        }
        Ok(rows)
    }

    /// `(x0, xT)`: the source and the last accepted state. All proposals
    /// rejected collapses it to `(x0, x0)`.
    pub fn extract_pseudo_pair(&self) -> Result<PseudoPair> {
        let x0 = self.x0()?.clone();
        let xt = self
            .accepted_steps()
            .last()
            .expect("step 0 is accepted")
            .state
            .clone();
        Ok(PseudoPair { x0, xt })
    }
}

/// Flatten value labels over many trajectories.
pub fn label_value_all(trajs: &[Trajectory]) -> Result<Vec<LabeledExample>> {
    let mut rows = Vec::new();
    for t in trajs {
        rows.extend(t.label_value()?);
    }
    Ok(rows)
}

/// Flatten max-value labels over many trajectories.
pub fn label_max_value_all(trajs: &[Trajectory]) -> Result<Vec<LabeledExample>> {
    let mut rows = Vec::new();
    for t in trajs {
        rows.extend(t.label_max_value()?);
    }
    Ok(rows)
}

/// One pseudo-pair per trajectory, in input order.
pub fn extract_pseudo_pairs(trajs: &[Trajectory]) -> Result<Vec<PseudoPair>> {
    trajs.iter().map(Trajectory::extract_pseudo_pair).collect()
}

pub fn save_trajectories(
    trajs: &[Trajectory],
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for t in trajs {
        for s in &t.steps {
            let tokens = vocab.decode(&s.state);
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                t.id,
                s.step,
                s.op,
                if s.accepted { 1 } else { 0 },
                tokens,
                s.score
            ));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_trajectories(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, reason: String| Error::MalformedTrajectory { line, reason };

    let mut trajs: Vec<Trajectory> = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, step, op, accepted, tokens, score] = fields[..] else {
            return Err(malformed(
                line_no,
                format!("expected 6 tab-separated fields, found {}", fields.len()),
            ));
        };
        let id: u64 = id
            .parse()
            .map_err(|_| malformed(line_no, format!("bad trajectory id {id:?}")))?;
        let step: usize = step
            .parse()
            .map_err(|_| malformed(line_no, format!("bad step index {step:?}")))?;
        let op: TrajOp = op
            .parse()
            .map_err(|_| malformed(line_no, format!("unknown operation {op:?}")))?;
        let accepted = match accepted {
            "1" => true,
            "0" => false,
            other => {
                return Err(malformed(
                    line_no,
                    format!("accepted flag must be 1 or 0, found {other:?}"),
                ))
            }
        };
        if tokens.is_empty() {
            return Err(malformed(line_no, "empty sentence".into()));
        }
        let words: Vec<String> = tokens.split(' ').map(str::to_owned).collect();
        let state = vocab.intern(&words);
        let score: f64 = score
            .parse()
            .map_err(|_| malformed(line_no, format!("bad score {score:?}")))?;

        let start_new = trajs.last().map_or(true, |t| t.id != id);
        if start_new {
            if !seen_ids.insert(id) {
                return Err(malformed(
                    line_no,
                    format!("trajectory {id} appears in two separate blocks"),
                ));
            }
            if step != 0 {
                return Err(malformed(
                    line_no,
                    format!("trajectory {id} starts at step {step}, expected 0"),
                ));
            }
            if op != TrajOp::Init || !accepted {
                return Err(malformed(
                    line_no,
                    format!("trajectory {id} must start with an accepted init step"),
                ));
            }
            trajs.push(Trajectory { id, steps: Vec::new() });
        } else {
            let prev = trajs.last().unwrap().steps.last().unwrap().step;
            if step != prev + 1 {
                return Err(malformed(
                    line_no,
                    format!("step {step} follows step {prev}, expected {}", prev + 1),
                ));
            }
            if op == TrajOp::Init {
                return Err(malformed(
                    line_no,
                    "init operation is only valid at step 0".into(),
                ));
            }
        }
        trajs.last_mut().unwrap().steps.push(TrajStep {
            step,
            op,
            accepted,
            state,
            score,
        });
    }
    Ok(trajs)
}
