//! Scoring of parsed verdicts against ground truth.

mod folds;
mod matching;
mod metrics;
mod scoring;

pub use folds::{make_folds, Fold, FoldPlan};
pub use matching::{match_pairs, MatchPolicy, NameNormalization};
pub use metrics::{aggregate, compute_metrics, round_half_up, AggregateReport, AggregateStat, SdMode, ZeroDivPolicy};
pub use scoring::{score_detection, score_variable_identification, ScoreResult};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("result references entry id {id}, which is not in the ground truth")]
    UnknownEntry { id: u32 },
    #[error("fold count must be positive")]
    InvalidFoldCount,
}

/// Confusion matrix tallies for a binary detection task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    /// Number of scored entries.
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, cell: ScoreCell) {
        match cell {
            ScoreCell::Tp => self.tp += 1,
            ScoreCell::Fp => self.fp += 1,
            ScoreCell::Tn => self.tn += 1,
            ScoreCell::Fn => self.fn_ += 1,
            ScoreCell::Excluded => {}
        }
    }
}

/// Which confusion cell one scored entry landed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreCell {
    Tp,
    Fp,
    Tn,
    Fn,
    Excluded,
}

/// How an indeterminate verdict enters the confusion matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndeterminatePolicy {
    /// A detector that fails to answer has not detected a race.
    #[default]
    AsNo,
    AsYes,
    /// Count against the model: racy entries become FN, clean ones FP.
    AsWrong,
    /// Drop the entry from scoring; shrinks N and is reported.
    Exclude,
}

impl fmt::Display for IndeterminatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndeterminatePolicy::AsNo => "as-no",
            IndeterminatePolicy::AsYes => "as-yes",
            IndeterminatePolicy::AsWrong => "as-wrong",
            IndeterminatePolicy::Exclude => "exclude",
        })
    }
}

impl FromStr for IndeterminatePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "as-no" | "as_no" => Ok(IndeterminatePolicy::AsNo),
            "as-yes" | "as_yes" => Ok(IndeterminatePolicy::AsYes),
            "as-wrong" | "as_wrong" => Ok(IndeterminatePolicy::AsWrong),
            "exclude" => Ok(IndeterminatePolicy::Exclude),
            other => Err(format!(
                "unknown indeterminate policy `{other}` (expected as-no, as-yes, as-wrong, exclude)"
            )),
        }
    }
}

/// Scoring task selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Binary data race detection.
    Detect,
    /// Detection plus variable pair identification.
    Identify,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Detect => "detect",
            Task::Identify => "identify",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "detect" | "detection" => Ok(Task::Detect),
            "identify" | "identification" => Ok(Task::Identify),
            other => Err(format!(
                "unknown task `{other}` (expected detect or identify)"
            )),
        }
    }
}

/// Recall, precision, and F1 computed from confusion counts.
///
/// A metric is `None` when its denominator is zero and the zero-division
/// policy keeps it undefined; tables render those as a dash.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionCounts,
}
