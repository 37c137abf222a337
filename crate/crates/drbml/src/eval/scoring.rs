//! Confusion-count scoring for detection and identification tasks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    match_pairs, ConfusionCounts, EvalError, IndeterminatePolicy, MatchPolicy, ScoreCell,
};
use crate::corpus::DrbMlEntry;
use crate::parse::{ParsedVerdict, Verdict};

/// Scored counts plus the per-entry cell assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub counts: ConfusionCounts,
    /// Entries dropped under [`IndeterminatePolicy::Exclude`].
    pub excluded: usize,
    pub cells: Vec<(u32, ScoreCell)>,
}

fn resolve_verdict(
    verdict: Verdict,
    truth_racy: bool,
    policy: IndeterminatePolicy,
) -> Option<bool> {
    match verdict {
        Verdict::Yes => Some(true),
        Verdict::No => Some(false),
        Verdict::Indeterminate => match policy {
            IndeterminatePolicy::AsNo => Some(false),
            IndeterminatePolicy::AsYes => Some(true),
            IndeterminatePolicy::AsWrong => Some(!truth_racy),
            IndeterminatePolicy::Exclude => None,
        },
    }
}

fn truth_map(truth: &[DrbMlEntry]) -> HashMap<u32, &DrbMlEntry> {
    truth.iter().map(|e| (e.id, e)).collect()
}

/// Scores binary detection verdicts against ground-truth labels.
///
/// YES on a racy entry is a true positive, YES on a clean entry a false
/// positive, and so on; indeterminate verdicts are resolved by `policy`
/// first. Every scored entry lands in exactly one cell.
pub fn score_detection(
    results: &[(u32, ParsedVerdict)],
    truth: &[DrbMlEntry],
    policy: IndeterminatePolicy,
) -> Result<ScoreResult, EvalError> {
    let by_id = truth_map(truth);
    let mut counts = ConfusionCounts::default();
    let mut excluded = 0;
    let mut cells = Vec::with_capacity(results.len());
    for (id, parsed) in results {
        let entry = by_id.get(id).ok_or(EvalError::UnknownEntry { id: *id })?;
        let cell = match resolve_verdict(parsed.verdict, entry.has_race(), policy) {
            None => {
                excluded += 1;
                ScoreCell::Excluded
            }
            Some(predicted) => match (predicted, entry.has_race()) {
                (true, true) => ScoreCell::Tp,
                (true, false) => ScoreCell::Fp,
                (false, false) => ScoreCell::Tn,
                (false, true) => ScoreCell::Fn,
            },
        };
        counts.add(cell);
        cells.push((*id, cell));
    }
    Ok(ScoreResult {
        counts,
        excluded,
        cells,
    })
}

/// Scores detection-with-variable-identification against ground truth.
///
/// On racy entries the verdict must be YES *and* one predicted pair must
/// match one gold pair (taken against the trimmed code) to count as a true
/// positive; anything else is a false negative. Clean entries score as in
/// plain detection. Every entry maps to exactly one cell.
pub fn score_variable_identification(
    results: &[(u32, ParsedVerdict)],
    truth: &[DrbMlEntry],
    match_policy: &MatchPolicy,
    indeterminate: IndeterminatePolicy,
) -> Result<ScoreResult, EvalError> {
    let by_id = truth_map(truth);
    let mut counts = ConfusionCounts::default();
    let mut excluded = 0;
    let mut cells = Vec::with_capacity(results.len());
    for (id, parsed) in results {
        let entry = by_id.get(id).ok_or(EvalError::UnknownEntry { id: *id })?;
        let cell = match resolve_verdict(parsed.verdict, entry.has_race(), indeterminate) {
            None => {
                excluded += 1;
                ScoreCell::Excluded
            }
            Some(predicted_yes) => {
                if entry.has_race() {
                    let matched = predicted_yes
                        && match_pairs(&parsed.pairs, entry.pairs_for_trimmed_code(), match_policy);
                    if matched {
                        ScoreCell::Tp
                    } else {
                        ScoreCell::Fn
                    }
                } else if predicted_yes {
                    ScoreCell::Fp
                } else {
                    ScoreCell::Tn
                }
            }
        };
        counts.add(cell);
        cells.push((*id, cell));
    }
    Ok(ScoreResult {
        counts,
        excluded,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_entry, Microbenchmark, Operation};
    use crate::parse::{ExtractedPair, SourceSpan};

    fn corpus(positives: usize, negatives: usize) -> Vec<DrbMlEntry> {
        let mut entries = Vec::new();
        for i in 0..positives + negatives {
            let id = (i + 1) as u32;
            let racy = i < positives;
            let source = if racy {
                format!(
                    "/*\nData race pair: v{id}@4:3:W vs. v{id}@4:8:R\n*/\n#pragma omp parallel for\nfor (;;) v{id} = v{id} + 1;\n"
                )
            } else {
                format!("int main() {{ return {id}; }}\n")
            };
            let name = format!("DRB{id:03}-gen{id}-{}.c", if racy { "yes" } else { "no" });
            let bench = Microbenchmark::from_source(name, source);
            entries.push(build_entry(&bench, id, None).unwrap().entry);
        }
        entries
    }

    fn verdict(v: Verdict) -> ParsedVerdict {
        ParsedVerdict {
            verdict: v,
            pairs: Vec::new(),
            diagnostics: if v == Verdict::Indeterminate {
                vec!["no cues".to_string()]
            } else {
                Vec::new()
            },
            source_span: if v == Verdict::Indeterminate {
                None
            } else {
                Some(SourceSpan { start: 0, end: 1 })
            },
        }
    }

    fn echo_gold(entry: &DrbMlEntry) -> ParsedVerdict {
        let pairs = entry
            .pairs_for_trimmed_code()
            .iter()
            .map(|p| ExtractedPair {
                names: p.names.clone(),
                lines: Some(p.lines),
                cols: Some(p.cols),
                operations: Some(p.operations),
            })
            .collect();
        ParsedVerdict {
            verdict: Verdict::Yes,
            pairs,
            diagnostics: Vec::new(),
            source_span: Some(SourceSpan { start: 0, end: 3 }),
        }
    }

    #[test]
    fn all_correct_oracle() {
        let truth = corpus(100, 98);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                (
                    e.id,
                    verdict(if e.has_race() { Verdict::Yes } else { Verdict::No }),
                )
            })
            .collect();
        let score = score_detection(&results, &truth, IndeterminatePolicy::AsNo).unwrap();
        assert_eq!(score.counts, ConfusionCounts::new(100, 0, 98, 0));
        assert_eq!(score.excluded, 0);
    }

    #[test]
    fn all_flipped_complement() {
        let truth = corpus(100, 98);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                (
                    e.id,
                    verdict(if e.has_race() { Verdict::No } else { Verdict::Yes }),
                )
            })
            .collect();
        let score = score_detection(&results, &truth, IndeterminatePolicy::AsNo).unwrap();
        assert_eq!(score.counts, ConfusionCounts::new(0, 98, 0, 100));
    }

    #[test]
    fn indeterminate_as_no_lands_by_truth_label() {
        // Ten entries, two indeterminate: one racy (id 1), one clean (id 6).
        let truth = corpus(5, 5);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                let v = match e.id {
                    1 | 6 => Verdict::Indeterminate,
                    _ if e.has_race() => Verdict::Yes,
                    _ => Verdict::No,
                };
                (e.id, verdict(v))
            })
            .collect();
        let score = score_detection(&results, &truth, IndeterminatePolicy::AsNo).unwrap();
        // Racy indeterminate becomes FN, clean indeterminate becomes TN.
        assert_eq!(score.counts, ConfusionCounts::new(4, 0, 5, 1));
        assert_eq!(score.cells[0].1, ScoreCell::Fn);
        assert_eq!(score.cells[5].1, ScoreCell::Tn);
    }

    #[test]
    fn indeterminate_policies() {
        let truth = corpus(1, 1);
        let results = vec![
            (1, verdict(Verdict::Indeterminate)),
            (2, verdict(Verdict::Indeterminate)),
        ];
        let as_yes = score_detection(&results, &truth, IndeterminatePolicy::AsYes).unwrap();
        assert_eq!(as_yes.counts, ConfusionCounts::new(1, 1, 0, 0));
        let as_wrong = score_detection(&results, &truth, IndeterminatePolicy::AsWrong).unwrap();
        assert_eq!(as_wrong.counts, ConfusionCounts::new(0, 1, 0, 1));
        let exclude = score_detection(&results, &truth, IndeterminatePolicy::Exclude).unwrap();
        assert_eq!(exclude.counts.total(), 0);
        assert_eq!(exclude.excluded, 2);
    }

    #[test]
    fn unknown_entry_is_an_error() {
        let truth = corpus(1, 1);
        let results = vec![(99, verdict(Verdict::Yes))];
        assert!(matches!(
            score_detection(&results, &truth, IndeterminatePolicy::AsNo),
            Err(EvalError::UnknownEntry { id: 99 })
        ));
    }

    #[test]
    fn identification_oracle_echo() {
        let truth = corpus(100, 98);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                if e.has_race() {
                    (e.id, echo_gold(e))
                } else {
                    (e.id, verdict(Verdict::No))
                }
            })
            .collect();
        let score = score_variable_identification(
            &results,
            &truth,
            &MatchPolicy::default(),
            IndeterminatePolicy::AsNo,
        )
        .unwrap();
        assert_eq!(score.counts, ConfusionCounts::new(100, 0, 98, 0));
    }

    #[test]
    fn identification_yes_with_wrong_pairs_is_fn() {
        let truth = corpus(3, 0);
        let wrong = ExtractedPair {
            names: ["zz".to_string(), "zz".to_string()],
            lines: Some([1, 1]),
            cols: None,
            operations: Some([Operation::Write, Operation::Write]),
        };
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                let mut v = verdict(Verdict::Yes);
                v.pairs = vec![wrong.clone()];
                (e.id, v)
            })
            .collect();
        let score = score_variable_identification(
            &results,
            &truth,
            &MatchPolicy::default(),
            IndeterminatePolicy::AsNo,
        )
        .unwrap();
        assert_eq!(score.counts.tp, 0);
        assert_eq!(score.counts.fn_, 3);
    }

    #[test]
    fn identification_row_engineered_to_published_counts() {
        // 100 racy + 98 clean entries arranged to produce (14, 31, 67, 86).
        let truth = corpus(100, 98);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| {
                let parsed = if e.has_race() {
                    if e.id <= 14 {
                        echo_gold(e)
                    } else {
                        verdict(Verdict::No)
                    }
                } else if e.id <= 100 + 31 {
                    verdict(Verdict::Yes)
                } else {
                    verdict(Verdict::No)
                };
                (e.id, parsed)
            })
            .collect();
        let score = score_variable_identification(
            &results,
            &truth,
            &MatchPolicy::default(),
            IndeterminatePolicy::AsNo,
        )
        .unwrap();
        assert_eq!(score.counts, ConfusionCounts::new(14, 31, 67, 86));
        let metrics = super::super::compute_metrics(score.counts, Default::default());
        assert!((metrics.recall.unwrap() - 0.140).abs() <= 5e-4);
        assert!((metrics.precision.unwrap() - 0.311).abs() <= 5e-4);
        assert!((metrics.f1.unwrap() - 0.193).abs() <= 5e-4);
    }

    #[test]
    fn totals_match_scored_entries() {
        let truth = corpus(4, 4);
        let results: Vec<(u32, ParsedVerdict)> = truth
            .iter()
            .map(|e| (e.id, verdict(Verdict::Yes)))
            .collect();
        let score = score_detection(&results, &truth, IndeterminatePolicy::AsNo).unwrap();
        assert_eq!(score.counts.total() + score.excluded, results.len());
    }
}
