//! Ingestion of DataRaceBench-style microbenchmarks into structured entries.
//!
//! A benchmark file named `DRB<index>-<mnemonic>-<yes|no>.c` becomes one
//! [`DrbMlEntry`]: original source, comment-stripped source, binary race
//! label, and the annotated variable pairs. Entries serialize to one JSON
//! file each and round-trip losslessly.

mod annotation;
mod dataset;
mod strip;

pub use annotation::parse_race_annotation;
pub use dataset::{load_dataset, write_dataset};
pub use strip::{strip_comments, LineMap, StripOutcome};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed benchmark filename `{name}`: expected DRB<index>-<mnemonic>-<yes|no>.c")]
    MalformedFilename { name: String },
    #[error("unterminated block comment opened on line {line}")]
    UnterminatedComment { line: u32 },
    #[error("malformed data race annotation: `{text}`")]
    MalformedAnnotation { text: String },
    #[error("duplicate entry id {id}")]
    DuplicateId { id: u32 },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// A single access operation in a variable pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operation {
    #[serde(rename = "R", alias = "r", alias = "read", alias = "Read")]
    Read,
    #[serde(rename = "W", alias = "w", alias = "write", alias = "Write")]
    Write,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operation::Read => "R",
            Operation::Write => "W",
        })
    }
}

/// A pair of conflicting accesses; element 1 depends on element 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarPair {
    #[serde(rename = "name")]
    pub names: [String; 2],
    #[serde(rename = "line")]
    pub lines: [u32; 2],
    #[serde(rename = "col")]
    pub cols: [u32; 2],
    #[serde(rename = "operation")]
    pub operations: [Operation; 2],
}

impl VarPair {
    /// True when at least one side is a write, the race-defining condition.
    pub fn involves_write(&self) -> bool {
        self.operations.contains(&Operation::Write)
    }
}

/// One microbenchmark's ML-ready record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrbMlEntry {
    #[serde(rename = "ID")]
    pub id: u32,
    pub name: String,
    #[serde(rename = "DRB_code")]
    pub drb_code: String,
    pub trimmed_code: String,
    pub code_len: usize,
    pub data_race: u8,
    pub data_race_label: String,
    /// Pairs exactly as annotated in the source (original line numbers).
    pub var_pairs: Vec<VarPair>,
    /// Pairs with line numbers remapped to the trimmed code, present when
    /// every annotated line survived comment removal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_pairs_trimmed: Option<Vec<VarPair>>,
}

impl DrbMlEntry {
    pub fn has_race(&self) -> bool {
        self.data_race == 1
    }

    /// Pairs expressed against the trimmed code when the remap exists,
    /// falling back to the annotated originals.
    pub fn pairs_for_trimmed_code(&self) -> &[VarPair] {
        self.var_pairs_trimmed.as_deref().unwrap_or(&self.var_pairs)
    }
}

/// A raw benchmark source file prior to entry construction.
#[derive(Debug, Clone)]
pub struct Microbenchmark {
    pub path: PathBuf,
    pub filename: String,
    pub raw_source: String,
}

impl Microbenchmark {
    pub fn from_path(path: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let path = path.into();
        let raw_source = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let filename = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self {
            path,
            filename,
            raw_source,
        })
    }

    pub fn from_source(filename: impl Into<String>, raw_source: impl Into<String>) -> Self {
        let filename = filename.into();
        Self {
            path: PathBuf::from(&filename),
            filename,
            raw_source: raw_source.into(),
        }
    }
}

static FILENAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^DRB(\d+)-(.+)-(?i:(yes|no))\.(?:c|cpp)$").unwrap());

/// Splits a benchmark filename into its index, mnemonic, and race flag.
///
/// The race flag is 1 when the final hyphen-delimited token before the
/// extension is `yes` (case-insensitive) and 0 when it is `no`.
pub fn parse_filename(filename: &str) -> Result<(u32, String, u8), CorpusError> {
    let caps = FILENAME
        .captures(filename)
        .ok_or_else(|| CorpusError::MalformedFilename {
            name: filename.to_string(),
        })?;
    let index: u32 = caps[1]
        .parse()
        .map_err(|_| CorpusError::MalformedFilename {
            name: filename.to_string(),
        })?;
    let mnemonic = caps[2].to_string();
    let race_flag = if caps[3].eq_ignore_ascii_case("yes") {
        1
    } else {
        0
    };
    Ok((index, mnemonic, race_flag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// A validation or build finding attached to an entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// A constructed entry together with the diagnostics raised while building.
#[derive(Debug, Clone)]
pub struct EntryBuild {
    pub entry: DrbMlEntry,
    pub diagnostics: Vec<Diagnostic>,
}

/// Builds a [`DrbMlEntry`] from a benchmark source.
///
/// Composes filename parsing, comment stripping, and annotation parsing.
/// `label` supplies the dataset's `data_race_label` when sidecar metadata is
/// available; otherwise `Y?`/`N?` is synthesized. Pairs are forced empty for
/// race-free files, with a warning if annotations were present anyway.
pub fn build_entry(
    bench: &Microbenchmark,
    id: u32,
    label: Option<&str>,
) -> Result<EntryBuild, CorpusError> {
    let (_, _, race_flag) = parse_filename(&bench.filename)?;
    let stripped = strip_comments(&bench.raw_source)?;
    let mut pairs = parse_race_annotation(&stripped.comment_text)?;
    let mut diagnostics = Vec::new();

    if race_flag == 0 && !pairs.is_empty() {
        diagnostics.push(Diagnostic::warning(format!(
            "{}: {} race pair annotation(s) found in a race-free file; dropped",
            bench.filename,
            pairs.len()
        )));
        pairs.clear();
    }

    let remapped = remap_pairs(&pairs, &stripped.line_map);
    if remapped.is_none() && !pairs.is_empty() {
        diagnostics.push(Diagnostic::warning(format!(
            "{}: annotated line numbers not present in trimmed code; remapped pairs omitted",
            bench.filename
        )));
    }

    let data_race_label = match label {
        Some(l) => l.to_string(),
        None if race_flag == 1 => "Y?".to_string(),
        None => "N?".to_string(),
    };

    let entry = DrbMlEntry {
        id,
        name: bench.filename.clone(),
        drb_code: bench.raw_source.clone(),
        code_len: stripped.trimmed_code.chars().count(),
        trimmed_code: stripped.trimmed_code,
        data_race: race_flag,
        data_race_label,
        var_pairs: pairs,
        var_pairs_trimmed: remapped,
    };
    diagnostics.extend(validate_entry(&entry));
    Ok(EntryBuild { entry, diagnostics })
}

fn remap_pairs(pairs: &[VarPair], map: &LineMap) -> Option<Vec<VarPair>> {
    if pairs.is_empty() {
        return None;
    }
    pairs
        .iter()
        .map(|p| {
            let lines = [map.get(p.lines[0])?, map.get(p.lines[1])?];
            Some(VarPair {
                names: p.names.clone(),
                lines,
                cols: p.cols,
                operations: p.operations,
            })
        })
        .collect()
}

/// Checks every entry invariant, returning one diagnostic per violation.
///
/// An empty list means the entry is clean. Structural breaks are errors;
/// suspicious-but-valid shapes (a racy entry without pairs, a pair with no
/// write access, line numbers past the end of the code) are warnings.
pub fn validate_entry(entry: &DrbMlEntry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if entry.id == 0 {
        out.push(Diagnostic::error("entry id must be positive"));
    }
    match parse_filename(&entry.name) {
        Err(_) => out.push(Diagnostic::error(format!(
            "entry name `{}` is not a valid benchmark filename",
            entry.name
        ))),
        Ok((_, _, flag)) if flag != entry.data_race => out.push(Diagnostic::error(format!(
            "data_race {} contradicts filename `{}`",
            entry.data_race, entry.name
        ))),
        Ok(_) => {}
    }
    if entry.data_race > 1 {
        out.push(Diagnostic::error(format!(
            "data_race must be 0 or 1, got {}",
            entry.data_race
        )));
    }
    if entry.data_race == 0 && !entry.var_pairs.is_empty() {
        out.push(Diagnostic::error(
            "race-free entry must have an empty var_pairs list",
        ));
    }
    if entry.data_race == 1 && entry.var_pairs.is_empty() {
        out.push(Diagnostic::warning(
            "racy entry has no variable pair annotations",
        ));
    }
    if entry.code_len != entry.trimmed_code.chars().count() {
        out.push(Diagnostic::error(format!(
            "code_len {} does not match trimmed code length {}",
            entry.code_len,
            entry.trimmed_code.chars().count()
        )));
    }
    match strip_comments(&entry.trimmed_code) {
        Ok(restripped) if restripped.trimmed_code != entry.trimmed_code => {
            out.push(Diagnostic::error(
                "trimmed_code still contains comment tokens",
            ));
        }
        Err(_) => out.push(Diagnostic::error(
            "trimmed_code does not lex as comment-free source",
        )),
        Ok(_) => {}
    }
    let raw_lines = entry.drb_code.lines().count() as u32;
    let trimmed_lines = entry.trimmed_code.lines().count() as u32;
    for (i, pair) in entry.var_pairs.iter().enumerate() {
        if pair.lines.contains(&0) || pair.cols.contains(&0) {
            out.push(Diagnostic::error(format!(
                "var_pairs[{i}]: line and column numbers must be positive"
            )));
        }
        if pair.lines.iter().any(|&l| l > raw_lines) {
            out.push(Diagnostic::warning(format!(
                "var_pairs[{i}]: line number exceeds source line count {raw_lines}"
            )));
        }
        if !pair.involves_write() {
            out.push(Diagnostic::warning(format!(
                "var_pairs[{i}]: neither access is a write"
            )));
        }
    }
    if let Some(trimmed_pairs) = &entry.var_pairs_trimmed {
        if trimmed_pairs.len() != entry.var_pairs.len() {
            out.push(Diagnostic::error(
                "var_pairs_trimmed length differs from var_pairs",
            ));
        }
        for (i, pair) in trimmed_pairs.iter().enumerate() {
            if pair.lines.iter().any(|&l| l > trimmed_lines) {
                out.push(Diagnostic::warning(format!(
                    "var_pairs_trimmed[{i}]: line number exceeds trimmed line count {trimmed_lines}"
                )));
            }
        }
    }
    out
}

/// Estimates how many model tokens a piece of text will occupy.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// Heuristic estimator: one token per `chars_per_token` characters, rounded up.
#[derive(Debug, Clone, Copy)]
pub struct CharsPerTokenEstimator {
    pub chars_per_token: usize,
}

impl Default for CharsPerTokenEstimator {
    fn default() -> Self {
        Self { chars_per_token: 4 }
    }
}

impl TokenEstimator for CharsPerTokenEstimator {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(self.chars_per_token.max(1))
    }
}

/// Keeps entries whose trimmed code estimates strictly below `budget` tokens.
pub fn filter_by_token_budget(
    entries: &[DrbMlEntry],
    budget: usize,
    estimator: &dyn TokenEstimator,
) -> Vec<DrbMlEntry> {
    entries
        .iter()
        .filter(|e| estimator.estimate(&e.trimmed_code) < budget)
        .cloned()
        .collect()
}

/// Reads a sidecar label file mapping benchmark filenames to labels.
pub fn load_label_sidecar(path: &Path) -> Result<std::collections::BTreeMap<String, String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Json {
        path: path.to_path_buf(),
        source,
    })
}
