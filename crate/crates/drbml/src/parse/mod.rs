//! Extraction of structured verdicts and variable pairs from model output.
//!
//! Model answers rarely honor the requested format, so extraction is
//! layered: a leading yes/no token wins, then verdict phrases in the first
//! sentence, then a whole-text cue count. Pair extraction accepts both JSON
//! answer schemas plus a plain-text fallback, and never fails: anything
//! unparsable becomes a diagnostic instead.

mod pairs;
mod verdict;

pub use pairs::extract_pairs;
pub use verdict::{extract_verdict, extract_verdict_with_rules, VerdictRules};

use serde::{Deserialize, Serialize};

use crate::corpus::Operation;

/// Binary detection verdict, or the admission that none could be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Indeterminate,
}

/// Byte range in the response text where the verdict cue was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

/// A variable pair recovered from model output.
///
/// Names are always present; everything else depends on how much structure
/// the model produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedPair {
    pub names: [String; 2],
    pub lines: Option<[u32; 2]>,
    pub cols: Option<[u32; 2]>,
    pub operations: Option<[Operation; 2]>,
}

/// Fully parsed model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedVerdict {
    pub verdict: Verdict,
    pub pairs: Vec<ExtractedPair>,
    pub diagnostics: Vec<String>,
    pub source_span: Option<SourceSpan>,
}

/// Runs verdict and pair extraction over one response text.
pub fn parse_response(text: &str) -> ParsedVerdict {
    let (verdict, source_span, mut diagnostics) = extract_verdict(text);
    let (pairs, pair_diags) = extract_pairs(text);
    diagnostics.extend(pair_diags);
    if verdict == Verdict::No && !pairs.is_empty() {
        diagnostics.push("variable pairs present despite a negative verdict".to_string());
    }
    ParsedVerdict {
        verdict,
        pairs,
        diagnostics,
        source_span,
    }
}
