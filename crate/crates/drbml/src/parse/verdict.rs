//! Layered yes/no verdict extraction.

use super::{SourceSpan, Verdict};

/// Cue phrases consulted by the sentence and whole-text layers.
///
/// The defaults encode the policy used throughout; callers with unusual
/// response styles can extend the lists.
#[derive(Debug, Clone)]
pub struct VerdictRules {
    pub yes_cues: Vec<String>,
    pub no_cues: Vec<String>,
}

impl Default for VerdictRules {
    fn default() -> Self {
        let yes = [
            "there is a data race",
            "there are data races",
            "data race exists",
            "data races exist",
            "contains a data race",
            "contains data races",
            "exhibits a data race",
            "exhibits data race",
            "data race is present",
            "has a data race",
            "data race detected",
        ];
        let no = [
            "no data race",
            "does not contain",
            "doesn't contain",
            "free of data races",
            "free from data races",
            "data race is absent",
            "not exhibit",
        ];
        Self {
            yes_cues: yes.iter().map(|s| s.to_string()).collect(),
            no_cues: no.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Extracts a verdict using the default rules.
pub fn extract_verdict(text: &str) -> (Verdict, Option<SourceSpan>, Vec<String>) {
    extract_verdict_with_rules(text, &VerdictRules::default())
}

/// Extracts a verdict from arbitrary response text.
///
/// Layer 1 reads the leading word, ignoring whitespace, punctuation, and
/// markdown decoration; a `yes` or `no` there is final. Layer 2 scans the
/// first sentence for cue phrases. Layer 3 counts cue phrases and bare
/// yes/no words over the whole text. Conflicting or absent cues yield
/// [`Verdict::Indeterminate`] with at least one diagnostic.
pub fn extract_verdict_with_rules(
    text: &str,
    rules: &VerdictRules,
) -> (Verdict, Option<SourceSpan>, Vec<String>) {
    if let Some((verdict, span)) = leading_token(text) {
        return (verdict, Some(span), Vec::new());
    }
    let lower = text.to_lowercase();
    if let Some(outcome) = first_sentence_scan(&lower, rules) {
        return outcome;
    }
    whole_text_count(&lower, rules)
}

/// Layer 1: the first word, with decoration stripped.
fn leading_token(text: &str) -> Option<(Verdict, SourceSpan)> {
    const DECORATION: &[char] = &[
        '*', '_', '~', '`', '#', '>', '"', '\'', '(', '[', '{', '-', '.', ':', '|',
    ];
    let mut start = None;
    let mut end = 0;
    for (idx, c) in text.char_indices() {
        if start.is_none() {
            if c.is_whitespace() || DECORATION.contains(&c) {
                continue;
            }
            if !c.is_alphabetic() {
                return None;
            }
            start = Some(idx);
            end = idx + c.len_utf8();
        } else if c.is_alphabetic() {
            end = idx + c.len_utf8();
        } else {
            break;
        }
    }
    let start = start?;
    let word = &text[start..end];
    let verdict = if word.eq_ignore_ascii_case("yes") {
        Verdict::Yes
    } else if word.eq_ignore_ascii_case("no") {
        Verdict::No
    } else {
        return None;
    };
    Some((verdict, SourceSpan { start, end }))
}

/// Layer 2: cue phrases within the first sentence.
fn first_sentence_scan(
    lower: &str,
    rules: &VerdictRules,
) -> Option<(Verdict, Option<SourceSpan>, Vec<String>)> {
    let end = lower
        .find(['.', '!', '?', '\n'])
        .unwrap_or(lower.len());
    let sentence = &lower[..end];
    let no_pos = first_cue(sentence, &rules.no_cues);
    let yes_pos = first_cue(sentence, &rules.yes_cues);
    match (yes_pos, no_pos) {
        (Some(_), Some(_)) => Some((
            Verdict::Indeterminate,
            None,
            vec!["conflicting affirmative and negative cues in the first sentence".to_string()],
        )),
        (Some((start, len)), None) => Some((
            Verdict::Yes,
            Some(SourceSpan {
                start,
                end: start + len,
            }),
            Vec::new(),
        )),
        (None, Some((start, len))) => Some((
            Verdict::No,
            Some(SourceSpan {
                start,
                end: start + len,
            }),
            Vec::new(),
        )),
        (None, None) => None,
    }
}

/// Layer 3: affirmative vs negative cue counting over the whole text.
fn whole_text_count(
    lower: &str,
    rules: &VerdictRules,
) -> (Verdict, Option<SourceSpan>, Vec<String>) {
    let mut yes_score = 0usize;
    let mut no_score = 0usize;
    let mut yes_span = None;
    let mut no_span = None;
    for cue in &rules.yes_cues {
        yes_score += lower.matches(cue.as_str()).count();
        if yes_span.is_none() {
            yes_span = lower.find(cue.as_str()).map(|p| (p, cue.len()));
        }
    }
    for cue in &rules.no_cues {
        no_score += lower.matches(cue.as_str()).count();
        if no_span.is_none() {
            no_span = lower.find(cue.as_str()).map(|p| (p, cue.len()));
        }
    }
    let mut offset = 0;
    for word in lower.split(|c: char| !c.is_alphanumeric()) {
        match word {
            "yes" => {
                yes_score += 1;
                if yes_span.is_none() {
                    yes_span = Some((offset, 3));
                }
            }
            "no" => {
                no_score += 1;
                if no_span.is_none() {
                    no_span = Some((offset, 2));
                }
            }
            _ => {}
        }
        offset += word.len() + 1;
    }
    if yes_score > no_score {
        let span = yes_span.map(|(start, len)| SourceSpan {
            start,
            end: start + len,
        });
        (Verdict::Yes, span, Vec::new())
    } else if no_score > yes_score {
        let span = no_span.map(|(start, len)| SourceSpan {
            start,
            end: start + len,
        });
        (Verdict::No, span, Vec::new())
    } else if yes_score == 0 {
        (
            Verdict::Indeterminate,
            None,
            vec!["no verdict cues found in response".to_string()],
        )
    } else {
        (
            Verdict::Indeterminate,
            None,
            vec![format!(
                "conflicting cues: {yes_score} affirmative vs {no_score} negative"
            )],
        )
    }
}

fn first_cue(haystack: &str, cues: &[String]) -> Option<(usize, usize)> {
    cues.iter()
        .filter_map(|cue| haystack.find(cue.as_str()).map(|p| (p, cue.len())))
        .min_by_key(|&(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict_of(text: &str) -> Verdict {
        extract_verdict(text).0
    }

    #[test]
    fn leading_yes_with_prose() {
        let (v, span, diags) =
            extract_verdict("Yes, the provided code exhibits data race issues.");
        assert_eq!(v, Verdict::Yes);
        assert_eq!(span, Some(SourceSpan { start: 0, end: 3 }));
        assert!(diags.is_empty());
    }

    #[test]
    fn bare_no() {
        assert_eq!(verdict_of("no"), Verdict::No);
        assert_eq!(verdict_of("No."), Verdict::No);
        assert_eq!(verdict_of("  NO, nothing here"), Verdict::No);
    }

    #[test]
    fn quoted_and_decorated_tokens() {
        assert_eq!(verdict_of("\"yes\",\n{...}"), Verdict::Yes);
        assert_eq!(verdict_of("**Yes**, there is."), Verdict::Yes);
        assert_eq!(verdict_of("- no"), Verdict::No);
    }

    #[test]
    fn leading_token_wins_over_later_flip() {
        assert_eq!(
            verdict_of("no. Although one could argue yes, yes, yes."),
            Verdict::No
        );
    }

    #[test]
    fn note_is_not_no() {
        assert_eq!(verdict_of("Note: nothing conclusive."), Verdict::Indeterminate);
    }

    #[test]
    fn sentence_cues() {
        assert_eq!(
            verdict_of("After analysis, there is a data race in the loop."),
            Verdict::Yes
        );
        assert_eq!(
            verdict_of("The snippet contains no data race at all."),
            Verdict::No
        );
        assert_eq!(
            verdict_of("This code does not contain any data races."),
            Verdict::No
        );
    }

    #[test]
    fn negated_phrase_not_misread_as_affirmative() {
        assert_eq!(
            verdict_of("In short, there is no data race here."),
            Verdict::No
        );
    }

    #[test]
    fn whole_text_fallback() {
        assert_eq!(
            verdict_of("The answer to your question would be: yes"),
            Verdict::Yes
        );
    }

    #[test]
    fn absent_cues_are_indeterminate_with_diagnostic() {
        let (v, span, diags) = extract_verdict("It depends on scheduling.");
        assert_eq!(v, Verdict::Indeterminate);
        assert!(span.is_none());
        assert!(!diags.is_empty());
    }

    #[test]
    fn empty_input() {
        assert_eq!(verdict_of(""), Verdict::Indeterminate);
    }
}
