//! Extraction of `Data race pair:` annotations from benchmark comments.

use std::sync::LazyLock;

use regex::Regex;

use super::{CorpusError, Operation, VarPair};

static PAIR_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)data\s+race\s+pairs?\s*:\s*(.*)").unwrap());
static SIDE_SPLIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+vs\.?\s+").unwrap());
static SIDE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.+)@(\d+):(\d+):([RWrw])$").unwrap());

/// Parses every `Data race pair:` line in the given comment text.
///
/// Each side of a pair has the form `<expr>@<line>:<col>:<op>` with the two
/// sides joined by `vs.`. The annotation's left-hand side becomes element 0
/// of the pair. Operations are normalized to upper case. Lines in file order.
pub fn parse_race_annotation(comment_text: &str) -> Result<Vec<VarPair>, CorpusError> {
    let mut pairs = Vec::new();
    for line in comment_text.lines() {
        let Some(caps) = PAIR_LINE.captures(line) else {
            continue;
        };
        let body = caps.get(1).map(|m| m.as_str().trim()).unwrap_or("");
        let sides: Vec<&str> = SIDE_SPLIT.split(body).collect();
        if sides.len() != 2 {
            return Err(CorpusError::MalformedAnnotation {
                text: line.trim().to_string(),
            });
        }
        let left = parse_side(sides[0], line)?;
        let right = parse_side(sides[1], line)?;
        pairs.push(VarPair {
            names: [left.0, right.0],
            lines: [left.1, right.1],
            cols: [left.2, right.2],
            operations: [left.3, right.3],
        });
    }
    Ok(pairs)
}

fn parse_side(side: &str, whole_line: &str) -> Result<(String, u32, u32, Operation), CorpusError> {
    let malformed = || CorpusError::MalformedAnnotation {
        text: whole_line.trim().to_string(),
    };
    let caps = SIDE.captures(side.trim()).ok_or_else(malformed)?;
    let expr = caps[1].trim().to_string();
    let line: u32 = caps[2].parse().map_err(|_| malformed())?;
    let col: u32 = caps[3].parse().map_err(|_| malformed())?;
    if expr.is_empty() || line == 0 || col == 0 {
        return Err(malformed());
    }
    let op = match &caps[4] {
        "R" | "r" => Operation::Read,
        _ => Operation::Write,
    };
    Ok((expr, line, col, op))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_annotation() {
        let pairs =
            parse_race_annotation("Data race pair: a[i+1]@64:10:R vs. a[i]@64:5:W").unwrap();
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.names, ["a[i+1]".to_string(), "a[i]".to_string()]);
        assert_eq!(p.lines, [64, 64]);
        assert_eq!(p.cols, [10, 5]);
        assert_eq!(p.operations, [Operation::Read, Operation::Write]);
    }

    #[test]
    fn no_annotation_lines_yield_empty_list() {
        let pairs = parse_race_annotation("A loop with anti-dependence.\nNothing else.").unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn multiple_lines_keep_file_order() {
        let text = "Data race pair: x@3:1:W vs. x@3:1:w\nfiller\nData race pair: y@9:2:r vs. y@10:4:W";
        let pairs = parse_race_annotation(text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].names[0], "x");
        assert_eq!(pairs[0].operations, [Operation::Write, Operation::Write]);
        assert_eq!(pairs[1].names[0], "y");
        assert_eq!(pairs[1].lines, [9, 10]);
    }

    #[test]
    fn lowercase_ops_normalized() {
        let pairs = parse_race_annotation("Data race pair: a@1:1:r vs. b@2:2:w").unwrap();
        assert_eq!(
            pairs[0].operations,
            [Operation::Read, Operation::Write]
        );
    }

    #[test]
    fn malformed_annotation_is_an_error() {
        for bad in [
            "Data race pair: a@64:10 vs. b@64:5:W",
            "Data race pair: a@64:10:R",
            "Data race pair: a@x:10:R vs. b@64:5:W",
            "Data race pair: @1:1:R vs. b@2:2:W",
        ] {
            let err = parse_race_annotation(bad).unwrap_err();
            match err {
                CorpusError::MalformedAnnotation { text } => {
                    assert!(!text.is_empty(), "diagnostic should carry the line")
                }
                other => panic!("unexpected error for `{bad}`: {other}"),
            }
        }
    }

    #[test]
    fn expression_with_at_sign_splits_on_last() {
        // Greedy expr match: only the final @line:col:op is structural.
        let pairs = parse_race_annotation("Data race pair: a@b@5:2:R vs. c@6:1:W").unwrap();
        assert_eq!(pairs[0].names[0], "a@b");
        assert_eq!(pairs[0].lines[0], 5);
    }
}
