//! Learned stand-ins for the heuristic objective, trained from recorded
//! search trajectories.
//!
//! Two model families live here. [`ValueRegressor`] is a small tanh
//! network over hand-built sentence-pair features; trained on value labels
//! it predicts a state's own score, trained on max-value labels it
//! predicts the best score still reachable. [`EmissionModel`] is a
//! copy/bigram/unigram mixture estimating the probability of emitting a
//! sentence given the source, fitted on the pseudo-pairs a search run
//! produces. Both wrap into the [`Objective`](crate::objective::Objective)
//! interface so they can be blended into acceptance scoring.

mod emission;
mod features;
mod regressor;

pub use emission::{
    load_emission, save_emission, train_s2s, EmissionHyper, EmissionModel, EmissionObjective,
    EmissionReport,
};
pub use features::{featurize, FeatureContext, Standardizer, FEATURE_DIM};
pub use regressor::{
    load_regressor, predict_value, save_regressor, train_on_features, train_regressor,
    RegressorObjective, TrainHyper, TrainReport, ValueRegressor,
};

use std::fmt;
use std::str::FromStr;

/// Which label set a regressor was trained on, or the emission family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurrogateKind {
    /// Regressor on each accepted state's own score.
    Value,
    /// Regressor on the inclusive suffix maximum of accepted scores.
    MaxValue,
    /// Copy/bigram emission probability model.
    S2s,
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurrogateKind::Value => "value",
            SurrogateKind::MaxValue => "maxvalue",
            SurrogateKind::S2s => "s2s",
        })
    }
}

impl FromStr for SurrogateKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "value" => Ok(SurrogateKind::Value),
            "maxvalue" => Ok(SurrogateKind::MaxValue),
            "s2s" => Ok(SurrogateKind::S2s),
            other => Err(crate::error::Error::Config(format!(
                "unknown surrogate kind {other:?} (expected value, maxvalue, or s2s)"
            ))),
        }
    }
}
