//! Variable pair extraction from JSON fragments and plain text.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;

use super::ExtractedPair;
use crate::corpus::Operation;

static MENTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)[`'"]?([A-Za-z_][A-Za-z0-9_\[\]\+\-\*\.]*)[`'"]?\s+(?:at|on)\s+line\s+(\d+)"#)
        .unwrap()
});

const FRAGMENT_PREVIEW: usize = 80;

/// Extracts variable pairs from arbitrary response text.
///
/// Balanced JSON objects and arrays are located anywhere in the text
/// (fenced or bare) and accepted in either answer schema: the
/// `variable_names`/`variable_locations`/`operation_types` shape or the
/// `name`/`line`/`col`/`operation_types` shape. Mild syntax damage (single
/// quotes, trailing commas) is repaired before parsing. When no JSON pair
/// is found, `<expr> at line <n>` mentions are paired up as a fallback.
/// Never fails: malformed fragments surface as diagnostics.
pub fn extract_pairs(text: &str) -> (Vec<ExtractedPair>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut diagnostics = Vec::new();

    for candidate in balanced_json_spans(text) {
        let parsed = serde_json::from_str::<Value>(candidate)
            .or_else(|_| serde_json::from_str::<Value>(&lenient_fix(candidate)));
        match parsed {
            Ok(value) => collect_from_value(&value, &mut pairs, &mut diagnostics),
            Err(_) => diagnostics.push(format!(
                "unparsable JSON fragment: `{}`",
                preview(candidate)
            )),
        }
    }

    if pairs.is_empty() {
        let mentions: Vec<(String, u32)> = MENTION
            .captures_iter(text)
            .filter_map(|c| {
                let line: u32 = c[2].parse().ok()?;
                Some((c[1].trim().to_string(), line))
            })
            .collect();
        if !mentions.is_empty() {
            diagnostics.push("pairs recovered from plain-text line mentions".to_string());
            for chunk in mentions.chunks(2) {
                if let [a, b] = chunk {
                    pairs.push(ExtractedPair {
                        names: [a.0.clone(), b.0.clone()],
                        lines: Some([a.1, b.1]),
                        cols: None,
                        operations: None,
                    });
                } else {
                    diagnostics.push(format!(
                        "unpaired variable mention `{}` at line {}",
                        chunk[0].0, chunk[0].1
                    ));
                }
            }
        }
    }

    if pairs.is_empty() && diagnostics.is_empty() {
        diagnostics.push("no JSON objects or pair mentions found".to_string());
    }
    (pairs, diagnostics)
}

/// Top-level balanced `{...}` / `[...]` spans, string-literal aware.
fn balanced_json_spans(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut stack: Vec<u8> = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_string = true,
            b'{' | b'[' => {
                if depth == 0 {
                    start = i;
                    stack.clear();
                }
                stack.push(if b == b'{' { b'}' } else { b']' });
                depth += 1;
            }
            b'}' | b']' => {
                if depth > 0 && stack.last() == Some(&b) {
                    stack.pop();
                    depth -= 1;
                    if depth == 0 {
                        spans.push(&text[start..=i]);
                    }
                } else {
                    // Mismatched close: abandon the current span.
                    depth = 0;
                    stack.clear();
                }
            }
            _ => {}
        }
    }
    spans
}

/// Bounded repair: single-quoted strings and trailing commas only.
fn lenient_fix(fragment: &str) -> String {
    let mut out = String::with_capacity(fragment.len());
    let mut in_double = false;
    let mut in_single = false;
    let mut escaped = false;
    for c in fragment.chars() {
        if escaped {
            out.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' if in_double || in_single => {
                out.push(c);
                escaped = true;
            }
            '"' if in_single => out.push_str("\\\""),
            '"' => {
                in_double = !in_double;
                out.push(c);
            }
            '\'' if !in_double => {
                in_single = !in_single;
                out.push('"');
            }
            _ => out.push(c),
        }
    }
    // Drop commas that directly precede a closing bracket.
    let mut fixed = String::with_capacity(out.len());
    let mut in_string = false;
    let mut escaped = false;
    let chars: Vec<char> = out.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            fixed.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                fixed.push(c);
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some('}') | Some(']')) {
                    fixed.push(c);
                }
            }
            _ => fixed.push(c),
        }
    }
    fixed
}

fn collect_from_value(value: &Value, pairs: &mut Vec<ExtractedPair>, diags: &mut Vec<String>) {
    match value {
        Value::Array(items) => {
            for item in items {
                collect_from_value(item, pairs, diags);
            }
        }
        Value::Object(obj) => {
            let advanced = obj.contains_key("variable_names");
            let bp2 = obj.contains_key("name");
            if advanced {
                object_to_pair(
                    value,
                    "variable_names",
                    "variable_locations",
                    None,
                    pairs,
                    diags,
                );
            } else if bp2 {
                object_to_pair(value, "name", "line", Some("col"), pairs, diags);
            } else if !obj.contains_key("data_race") {
                diags.push(format!(
                    "JSON object without variable pair keys: `{}`",
                    preview(&value.to_string())
                ));
            }
        }
        _ => {}
    }
}

fn object_to_pair(
    value: &Value,
    names_key: &str,
    lines_key: &str,
    cols_key: Option<&str>,
    pairs: &mut Vec<ExtractedPair>,
    diags: &mut Vec<String>,
) {
    let Some(names) = two_strings(&value[names_key]) else {
        diags.push(format!(
            "`{names_key}` does not hold two variable names: `{}`",
            preview(&value.to_string())
        ));
        return;
    };
    if value[names_key].as_array().map(|a| a.len()) > Some(2) {
        diags.push(format!(
            "`{names_key}` holds more than two names; extra entries ignored"
        ));
    }
    let lines = two_numbers(&value[lines_key]);
    let cols = cols_key.and_then(|k| two_numbers(&value[k]));
    let operations = match &value["operation_types"] {
        Value::Null => match &value["operation"] {
            Value::Null => None,
            other => two_operations(other, diags),
        },
        other => two_operations(other, diags),
    };
    pairs.push(ExtractedPair {
        names,
        lines,
        cols,
        operations,
    });
}

fn two_strings(value: &Value) -> Option<[String; 2]> {
    let arr = value.as_array()?;
    if arr.len() < 2 {
        return None;
    }
    let as_name = |v: &Value| -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    };
    Some([as_name(&arr[0])?, as_name(&arr[1])?])
}

fn two_numbers(value: &Value) -> Option<[u32; 2]> {
    let arr = value.as_array()?;
    if arr.len() < 2 {
        return None;
    }
    let as_line = |v: &Value| -> Option<u32> {
        match v {
            Value::Number(n) => n.as_u64().and_then(|n| u32::try_from(n).ok()),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
    };
    Some([as_line(&arr[0])?, as_line(&arr[1])?])
}

fn two_operations(value: &Value, diags: &mut Vec<String>) -> Option<[Operation; 2]> {
    let arr = value.as_array()?;
    if arr.len() < 2 {
        return None;
    }
    let parse = |v: &Value| -> Option<Operation> {
        let s = v.as_str()?;
        match s.trim().to_ascii_lowercase().as_str() {
            "w" | "write" => Some(Operation::Write),
            "r" | "read" => Some(Operation::Read),
            _ => None,
        }
    };
    match (parse(&arr[0]), parse(&arr[1])) {
        (Some(a), Some(b)) => Some([a, b]),
        _ => {
            diags.push(format!(
                "unrecognized operation values: `{}`",
                preview(&value.to_string())
            ));
            None
        }
    }
}

fn preview(fragment: &str) -> String {
    let mut s: String = fragment.chars().take(FRAGMENT_PREVIEW).collect();
    if s.len() < fragment.len() {
        s.push('…');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advanced_ft_shape() {
        let text = r#""yes",
{
    "data_race": 1,
    "variable_names": ["a[i]", "a[i+1]"],
    "variable_locations": [14, 14],
    "operation_types": ["write", "read"]
}"#;
        let (pairs, _) = extract_pairs(text);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.names, ["a[i]".to_string(), "a[i+1]".to_string()]);
        assert_eq!(p.lines, Some([14, 14]));
        assert_eq!(p.cols, None);
        assert_eq!(p.operations, Some([Operation::Write, Operation::Read]));
    }

    #[test]
    fn bp2_shape_with_cols() {
        let text = r#"yes
{"name": ["a[i+1]", "a[i]"], "line": [64, 64], "col": [10, 5], "operation_types": ["R", "W"]}"#;
        let (pairs, _) = extract_pairs(text);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.cols, Some([10, 5]));
        assert_eq!(p.operations, Some([Operation::Read, Operation::Write]));
    }

    #[test]
    fn array_of_objects_and_fences() {
        let text = "```json\n[{\"variable_names\": [\"x\", \"y\"], \"variable_locations\": [1, 2], \"operation_types\": [\"write\", \"write\"]},\n {\"variable_names\": [\"u\", \"v\"], \"variable_locations\": [3, 4], \"operation_types\": [\"read\", \"write\"]}]\n```";
        let (pairs, diags) = extract_pairs(text);
        assert_eq!(pairs.len(), 2, "{diags:?}");
    }

    #[test]
    fn no_json_and_no_mentions() {
        let (pairs, diags) = extract_pairs("nothing to see here");
        assert!(pairs.is_empty());
        assert!(!diags.is_empty());
    }

    #[test]
    fn plain_text_mention_fallback() {
        // Mirrors the natural-language answer style of early responses.
        let text = "Yes, the provided code exhibits data race issues. The data race is caused by the variable 'x' at line 9 and the variable 'x' at line 26. Both instances involve write operations.";
        let (pairs, diags) = extract_pairs(text);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].names, ["x".to_string(), "x".to_string()]);
        assert_eq!(pairs[0].lines, Some([9, 26]));
        assert!(diags.iter().any(|d| d.contains("plain-text")));
    }

    #[test]
    fn single_quotes_and_trailing_commas_repaired() {
        let text = "{'variable_names': ['a', 'b'], 'variable_locations': [5, 6], 'operation_types': ['write', 'read'],}";
        let (pairs, _) = extract_pairs(text);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].lines, Some([5, 6]));
    }

    #[test]
    fn malformed_fragment_becomes_diagnostic() {
        let (pairs, diags) = extract_pairs("{\"variable_names\": [\"a\" \"b\"]}");
        assert!(pairs.is_empty());
        assert!(diags.iter().any(|d| d.contains("unparsable JSON fragment")));
    }

    #[test]
    fn data_race_only_object_is_not_a_pair() {
        let (pairs, diags) = extract_pairs("{\"data_race\": 0}");
        assert!(pairs.is_empty());
        // Not an error: the object is meaningful, just not a pair.
        assert!(diags.iter().all(|d| !d.contains("without variable pair keys")));
    }

    #[test]
    fn operations_missing_from_schema_stay_none() {
        let (pairs, _) = extract_pairs(r#"{"variable_names": ["a", "b"], "variable_locations": [1, 1]}"#);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].operations, None);
        assert_eq!(pairs[0].lines, Some([1, 1]));
    }
}
