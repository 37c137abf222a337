//! Metric formulas and cross-fold aggregation.

use serde::{Deserialize, Serialize};

use super::{ConfusionCounts, MetricsReport};

/// What to report when a metric's denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroDivPolicy {
    /// Surface the hole; tables print a dash.
    #[default]
    Undefined,
    /// Coerce to 0.0.
    Zero,
}

/// Standard deviation flavor for cross-fold aggregation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdMode {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1; undefined for a single fold.
    Sample,
}

/// Computes recall, precision, and F1 from confusion counts.
///
/// recall = tp/(tp+fn), precision = tp/(tp+fp), f1 = 2PR/(P+R). Raw values
/// keep full precision; rounding happens at render time.
pub fn compute_metrics(counts: ConfusionCounts, zero_div: ZeroDivPolicy) -> MetricsReport {
    let resolve = |num: usize, den: usize| -> Option<f64> {
        if den == 0 {
            match zero_div {
                ZeroDivPolicy::Undefined => None,
                ZeroDivPolicy::Zero => Some(0.0),
            }
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let recall = resolve(counts.tp, counts.tp + counts.fn_);
    let precision = resolve(counts.tp, counts.tp + counts.fp);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => match zero_div {
            ZeroDivPolicy::Undefined => None,
            ZeroDivPolicy::Zero => Some(0.0),
        },
        _ => match zero_div {
            ZeroDivPolicy::Undefined => None,
            ZeroDivPolicy::Zero => Some(0.0),
        },
    };
    MetricsReport {
        recall,
        precision,
        f1,
        counts,
    }
}

/// One metric's mean and spread across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStat {
    pub avg: Option<f64>,
    pub sd: Option<f64>,
    /// Folds whose metric was undefined and therefore left out.
    pub excluded: usize,
}

/// Cross-fold averages and standard deviations for R, P, and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub recall: AggregateStat,
    pub precision: AggregateStat,
    pub f1: AggregateStat,
}

/// Aggregates per-fold metric reports into AVG and SD columns.
///
/// Undefined fold metrics are excluded from that metric's aggregate, with
/// the exclusion count recorded.
pub fn aggregate(per_fold: &[MetricsReport], sd_mode: SdMode) -> AggregateReport {
    let stat = |select: fn(&MetricsReport) -> Option<f64>| -> AggregateStat {
        let values: Vec<f64> = per_fold.iter().filter_map(select).collect();
        let excluded = per_fold.len() - values.len();
        if values.is_empty() {
            return AggregateStat {
                avg: None,
                sd: None,
                excluded,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sum_sq: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = match sd_mode {
            SdMode::Population => Some((sum_sq / n).sqrt()),
            SdMode::Sample if values.len() >= 2 => Some((sum_sq / (n - 1.0)).sqrt()),
            SdMode::Sample => None,
        };
        AggregateStat {
            avg: Some(mean),
            sd,
            excluded,
        }
    };
    AggregateReport {
        recall: stat(|m| m.recall),
        precision: stat(|m| m.precision),
        f1: stat(|m| m.f1),
    }
}

/// Rounds half away from zero to `digits` decimal places.
///
/// Matches the table convention where e.g. 0.5625 prints as 0.563.
pub fn round_half_up(value: f64, digits: u32) -> f64 {
    let factor = 10f64.powi(digits as i32);
    (value * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: Option<f64>, expected: f64) {
        let actual = actual.expect("metric should be defined");
        assert!(
            (actual - expected).abs() <= 5e-4,
            "expected {expected}, got {actual}"
        );
    }

    #[test]
    fn inspector_row() {
        let m = compute_metrics(ConfusionCounts::new(88, 44, 53, 11), ZeroDivPolicy::Undefined);
        assert_close(m.recall, 0.889);
        assert_close(m.precision, 0.667);
        assert_close(m.f1, 0.762);
    }

    #[test]
    fn multi_task_prompt_row() {
        let m = compute_metrics(ConfusionCounts::new(35, 26, 72, 65), ZeroDivPolicy::Undefined);
        assert_close(m.recall, 0.350);
        assert_close(m.precision, 0.574);
        assert_close(m.f1, 0.435);
    }

    #[test]
    fn zero_division_yields_undefined() {
        let m = compute_metrics(ConfusionCounts::new(0, 0, 5, 0), ZeroDivPolicy::Undefined);
        assert_eq!(m.recall, None);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
    }

    #[test]
    fn zero_division_policy_zero() {
        let m = compute_metrics(ConfusionCounts::new(0, 0, 5, 0), ZeroDivPolicy::Zero);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.f1, Some(0.0));
    }

    #[test]
    fn f1_is_harmonic_mean() {
        let m = compute_metrics(ConfusionCounts::new(30, 20, 40, 10), ZeroDivPolicy::Undefined);
        let (p, r, f1) = (m.precision.unwrap(), m.recall.unwrap(), m.f1.unwrap());
        assert!((f1 - 2.0 / (1.0 / p + 1.0 / r)).abs() < 1e-12);
    }

    #[test]
    fn f1_zero_when_no_true_positives() {
        let m = compute_metrics(ConfusionCounts::new(0, 10, 40, 10), ZeroDivPolicy::Undefined);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.f1, None, "0/0 harmonic mean stays undefined");
    }

    #[test]
    fn aggregate_identical_folds() {
        let report = compute_metrics(ConfusionCounts::new(60, 40, 60, 40), ZeroDivPolicy::Undefined);
        let agg = aggregate(&[report; 5], SdMode::Population);
        assert!((agg.recall.avg.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(agg.recall.sd, Some(0.0));
        assert_eq!(agg.recall.excluded, 0);
    }

    #[test]
    fn aggregate_hand_computed_sd() {
        // Recalls {0.5, 0.5, 0.7, 0.7, 0.6}: mean 0.6, population SD sqrt(0.008).
        let mk = |tp: usize| {
            compute_metrics(
                ConfusionCounts::new(tp, 0, 0, 100 - tp),
                ZeroDivPolicy::Undefined,
            )
        };
        let folds = vec![mk(50), mk(50), mk(70), mk(70), mk(60)];
        let agg = aggregate(&folds, SdMode::Population);
        assert!((agg.recall.avg.unwrap() - 0.6).abs() < 1e-12);
        assert!((agg.recall.sd.unwrap() - 0.008f64.sqrt()).abs() < 1e-12);
        assert!((agg.recall.sd.unwrap() - 0.0894).abs() < 1e-4);
    }

    #[test]
    fn aggregate_excludes_undefined_folds() {
        let defined = compute_metrics(ConfusionCounts::new(10, 0, 10, 0), ZeroDivPolicy::Undefined);
        let undefined = compute_metrics(ConfusionCounts::new(0, 0, 10, 0), ZeroDivPolicy::Undefined);
        let agg = aggregate(
            &[defined, defined, defined, defined, undefined],
            SdMode::Population,
        );
        assert_eq!(agg.recall.excluded, 1);
        assert_eq!(agg.recall.avg, Some(1.0));
    }

    #[test]
    fn sample_sd_single_fold_undefined() {
        let report = compute_metrics(ConfusionCounts::new(10, 0, 10, 0), ZeroDivPolicy::Undefined);
        let agg = aggregate(&[report], SdMode::Sample);
        assert_eq!(agg.recall.sd, None);
        assert_eq!(agg.recall.avg, Some(1.0));
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(round_half_up(0.5625, 3), 0.563);
        assert_eq!(round_half_up(0.888888, 3), 0.889);
        assert_eq!(round_half_up(0.6666666, 3), 0.667);
    }
}
