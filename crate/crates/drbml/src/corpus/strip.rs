//! Comment removal for C/C++ sources with line renumbering.
//!
//! This is a lexer, not a parser: it tracks string and character literals
//! (including escapes) so that comment delimiters inside them survive, and
//! nothing else. Trigraphs and backslash line continuations are not handled.

use std::collections::BTreeMap;

use super::CorpusError;

/// Maps original source line numbers to line numbers in the trimmed code.
///
/// Lines consumed entirely by comments have no mapping. Both sides are
/// 1-based; the image is always the contiguous range `1..=len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineMap {
    inner: BTreeMap<u32, u32>,
}

impl LineMap {
    /// Trimmed-code line for an original line, if the line survived.
    pub fn get(&self, raw_line: u32) -> Option<u32> {
        self.inner.get(&raw_line).copied()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    /// Iterates `(raw_line, trimmed_line)` in raw-line order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.inner.iter().map(|(&k, &v)| (k, v))
    }
}

/// Result of stripping comments from one source file.
#[derive(Debug, Clone)]
pub struct StripOutcome {
    /// Source with all comments removed and emptied lines deleted.
    pub trimmed_code: String,
    /// Surviving-line mapping from raw to trimmed line numbers.
    pub line_map: LineMap,
    /// Concatenated comment bodies (delimiters excluded), newline separated.
    pub comment_text: String,
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Code,
    Str,
    Chr,
    LineComment,
    BlockComment,
}

/// Removes `//` and `/* */` comments from C/C++ source text.
///
/// Delimiters inside string or character literals are preserved. A line
/// whose content becomes empty because a comment was removed is deleted;
/// lines that were already blank survive. Surviving lines keep their order,
/// lose trailing whitespace, and are renumbered contiguously from 1 in the
/// returned [`LineMap`].
pub fn strip_comments(raw_source: &str) -> Result<StripOutcome, CorpusError> {
    let mut state = State::Code;
    let mut escaped = false;
    let mut block_open_line = 0u32;

    let mut line_no = 1u32;
    let mut kept = String::new();
    let mut had_comment = false;
    // (raw line number, kept text, line overlapped a comment)
    let mut lines: Vec<(u32, String, bool)> = Vec::new();
    let mut comment_text = String::new();

    let mut chars = raw_source.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' {
            match state {
                State::LineComment => {
                    comment_text.push('\n');
                    state = State::Code;
                }
                State::BlockComment => comment_text.push('\n'),
                _ => {}
            }
            lines.push((line_no, std::mem::take(&mut kept), had_comment));
            had_comment = state == State::BlockComment;
            line_no += 1;
            continue;
        }
        match state {
            State::Code => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    state = State::LineComment;
                    had_comment = true;
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    state = State::BlockComment;
                    had_comment = true;
                    block_open_line = line_no;
                }
                '"' => {
                    kept.push(c);
                    state = State::Str;
                    escaped = false;
                }
                '\'' => {
                    kept.push(c);
                    state = State::Chr;
                    escaped = false;
                }
                _ => kept.push(c),
            },
            State::Str | State::Chr => {
                kept.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if (state == State::Str && c == '"') || (state == State::Chr && c == '\'') {
                    state = State::Code;
                }
            }
            State::LineComment => comment_text.push(c),
            State::BlockComment => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    state = State::Code;
                    comment_text.push('\n');
                } else {
                    comment_text.push(c);
                }
            }
        }
    }

    if state == State::BlockComment {
        return Err(CorpusError::UnterminatedComment {
            line: block_open_line,
        });
    }
    if state == State::LineComment {
        comment_text.push('\n');
    }
    // Final line without a trailing newline.
    if !kept.is_empty() || !raw_source.is_empty() && !raw_source.ends_with('\n') {
        lines.push((line_no, kept, had_comment));
    }

    let mut trimmed = String::new();
    let mut map = BTreeMap::new();
    let mut out_no = 0u32;
    for (raw_no, text, commented) in &lines {
        let text = text.trim_end();
        if text.trim_start().is_empty() && *commented {
            continue;
        }
        out_no += 1;
        map.insert(*raw_no, out_no);
        trimmed.push_str(text);
        trimmed.push('\n');
    }
    if !raw_source.ends_with('\n') && trimmed.ends_with('\n') {
        trimmed.pop();
    }

    Ok(StripOutcome {
        trimmed_code: trimmed,
        line_map: LineMap { inner: map },
        comment_text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_comment_removed_line_survives() {
        let out = strip_comments("int x; // set\nx=1;").unwrap();
        assert_eq!(out.trimmed_code, "int x;\nx=1;");
        assert_eq!(out.line_map.get(1), Some(1));
        assert_eq!(out.line_map.get(2), Some(2));
    }

    #[test]
    fn leading_block_comment_deleted_and_renumbered() {
        let src = "/*\n * about\n * more\n */\nint main()\n{\n}\n";
        let out = strip_comments(src).unwrap();
        assert_eq!(out.trimmed_code, "int main()\n{\n}\n");
        assert_eq!(out.line_map.get(5), Some(1));
        assert_eq!(out.line_map.get(6), Some(2));
        assert_eq!(out.line_map.get(7), Some(3));
        assert_eq!(out.line_map.get(1), None);
        assert_eq!(out.line_map.get(4), None);
    }

    #[test]
    fn delimiters_inside_string_literal_preserved() {
        let src = "char* s = \"/* not a comment */\";";
        let out = strip_comments(src).unwrap();
        assert_eq!(out.trimmed_code, src);
    }

    #[test]
    fn delimiters_inside_char_literal_and_escapes() {
        let src = "char c = '\\''; char d = '\"'; int x; // tail";
        let out = strip_comments(src).unwrap();
        assert_eq!(out.trimmed_code, "char c = '\\''; char d = '\"'; int x;");
    }

    #[test]
    fn block_comment_mid_line_keeps_both_sides() {
        let out = strip_comments("int a; /* gone */ int b;").unwrap();
        assert_eq!(out.trimmed_code, "int a;  int b;");
    }

    #[test]
    fn preexisting_blank_lines_survive() {
        let src = "int a;\n\nint b;\n";
        let out = strip_comments(src).unwrap();
        assert_eq!(out.trimmed_code, src);
        assert_eq!(out.line_map.get(2), Some(2));
    }

    #[test]
    fn whitespace_then_comment_line_deleted() {
        let out = strip_comments("int a;\n   /* x */\nint b;").unwrap();
        assert_eq!(out.trimmed_code, "int a;\nint b;");
        assert_eq!(out.line_map.get(3), Some(2));
    }

    #[test]
    fn unterminated_block_comment_reports_opening_line() {
        let err = strip_comments("int a;\n/* oops\nint b;").unwrap_err();
        match err {
            CorpusError::UnterminatedComment { line } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn comment_text_collects_bodies() {
        let out = strip_comments("// alpha\nint x; /* beta\ngamma */\n").unwrap();
        assert_eq!(out.comment_text, " alpha\n beta\ngamma \n");
    }

    #[test]
    fn idempotent_on_own_output() {
        let src = "/* head */\nint x; // t\nchar* s = \"//\";\n\n  /* mid */ y();\n";
        let once = strip_comments(src).unwrap();
        let twice = strip_comments(&once.trimmed_code).unwrap();
        assert_eq!(once.trimmed_code, twice.trimmed_code);
    }

    #[test]
    fn line_map_image_is_contiguous() {
        let src = "/* a */\nint x;\n// b\nint y;\n";
        let out = strip_comments(src).unwrap();
        let images: Vec<u32> = out.line_map.iter().map(|(_, v)| v).collect();
        assert_eq!(images, vec![1, 2]);
    }
}
