//! Predicted-vs-gold variable pair matching.

use serde::{Deserialize, Serialize};

use crate::corpus::VarPair;
use crate::parse::ExtractedPair;

/// How variable names are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NameNormalization {
    Exact,
    /// Strip all whitespace before comparing: `a[i +1]` matches `a[i+1]`.
    #[default]
    WhitespaceInsensitive,
}

/// Criteria under which a predicted pair counts as matching a gold pair.
///
/// The published counts never state their matching rule, so every knob is
/// explicit here and pinned by tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub name_normalization: NameNormalization,
    pub require_lines: bool,
    /// Allowed absolute line difference; used only when `require_lines`.
    pub line_tolerance: u32,
    pub require_operations: bool,
    pub require_cols: bool,
    /// Allow the two sides of a predicted pair to swap.
    pub order_insensitive: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        Self {
            name_normalization: NameNormalization::WhitespaceInsensitive,
            require_lines: true,
            line_tolerance: 0,
            require_operations: true,
            require_cols: false,
            order_insensitive: true,
        }
    }
}

/// True when at least one predicted pair matches at least one gold pair.
pub fn match_pairs(predicted: &[ExtractedPair], gold: &[VarPair], policy: &MatchPolicy) -> bool {
    predicted
        .iter()
        .any(|p| gold.iter().any(|g| pair_matches(p, g, policy)))
}

fn pair_matches(predicted: &ExtractedPair, gold: &VarPair, policy: &MatchPolicy) -> bool {
    let alignments: &[[usize; 2]] = if policy.order_insensitive {
        &[[0, 1], [1, 0]]
    } else {
        &[[0, 1]]
    };
    alignments
        .iter()
        .any(|align| aligned_match(predicted, gold, *align, policy))
}

fn aligned_match(
    predicted: &ExtractedPair,
    gold: &VarPair,
    align: [usize; 2],
    policy: &MatchPolicy,
) -> bool {
    let name_eq = |a: &str, b: &str| match policy.name_normalization {
        NameNormalization::Exact => a == b,
        NameNormalization::WhitespaceInsensitive => {
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            strip(a) == strip(b)
        }
    };
    for side in 0..2 {
        let gold_side = align[side];
        if !name_eq(&predicted.names[side], &gold.names[gold_side]) {
            return false;
        }
        if policy.require_lines {
            let Some(lines) = predicted.lines else {
                return false;
            };
            let diff = lines[side].abs_diff(gold.lines[gold_side]);
            if diff > policy.line_tolerance {
                return false;
            }
        }
        if policy.require_operations {
            let Some(ops) = predicted.operations else {
                return false;
            };
            if ops[side] != gold.operations[gold_side] {
                return false;
            }
        }
        if policy.require_cols {
            let Some(cols) = predicted.cols else {
                return false;
            };
            if cols[side] != gold.cols[gold_side] {
                return false;
            }
        }
    }
    true
}
