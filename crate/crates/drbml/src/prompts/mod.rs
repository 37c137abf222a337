//! Prompt strategies and fine-tuning pair construction.

mod templates;

pub use templates::{TemplateCatalog, CODE_SLOT};

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DrbMlEntry, Operation, VarPair};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("strategy {strategy} is not rendered as a prompt; use the fine-tuning pair builder")]
    UnsupportedStrategy { strategy: Strategy },
    #[error("entry {entry_id} has no trimmed code to interpolate")]
    EmptyCode { entry_id: u32 },
    #[error("template `{name}` is invalid: {reason}")]
    BadTemplate { name: String, reason: String },
    #[error("failed to read template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    WriteIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The prompt strategies and fine-tuning pair kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Bp1,
    Bp2,
    Ap1,
    Ap2,
    BasicFt,
    AdvancedFt,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Bp1,
        Strategy::Bp2,
        Strategy::Ap1,
        Strategy::Ap2,
        Strategy::BasicFt,
        Strategy::AdvancedFt,
    ];

    /// True for the two fine-tuning pair kinds.
    pub fn is_fine_tuning(self) -> bool {
        matches!(self, Strategy::BasicFt | Strategy::AdvancedFt)
    }

    /// True when model answers are expected to carry variable pair JSON.
    pub fn expects_pairs(self) -> bool {
        matches!(self, Strategy::Bp2 | Strategy::AdvancedFt)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bp1 => "bp1",
            Strategy::Bp2 => "bp2",
            Strategy::Ap1 => "ap1",
            Strategy::Ap2 => "ap2",
            Strategy::BasicFt => "basic-ft",
            Strategy::AdvancedFt => "advanced-ft",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bp1" => Ok(Strategy::Bp1),
            "bp2" => Ok(Strategy::Bp2),
            "ap1" => Ok(Strategy::Ap1),
            "ap2" => Ok(Strategy::Ap2),
            "basic-ft" | "basic_ft" => Ok(Strategy::BasicFt),
            "advanced-ft" | "advanced_ft" => Ok(Strategy::AdvancedFt),
            other => Err(format!(
                "unknown strategy `{other}` (expected bp1, bp2, ap1, ap2, basic-ft, advanced-ft)"
            )),
        }
    }
}

/// Chat message role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A rendered prompt ready for a chat backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub strategy: Strategy,
    pub entry_id: u32,
    pub messages: Vec<Message>,
    /// Index within a multi-step chain; `None` for single-shot strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_position: Option<usize>,
}

/// Renders a prompt strategy for one entry.
///
/// The template text is emitted as a single user message with the entry's
/// trimmed code interpolated at the code slot. `Ap2` yields two instances:
/// the dependence-analysis step carrying the code, then the detection step,
/// which carries no code and relies on conversational context at run time.
pub fn render(
    strategy: Strategy,
    entry: &DrbMlEntry,
    catalog: &TemplateCatalog,
) -> Result<Vec<PromptInstance>, PromptError> {
    if strategy.is_fine_tuning() {
        return Err(PromptError::UnsupportedStrategy { strategy });
    }
    if entry.trimmed_code.is_empty() {
        return Err(PromptError::EmptyCode {
            entry_id: entry.id,
        });
    }
    let fill = |template: &str| template.replacen(CODE_SLOT, &entry.trimmed_code, 1);
    let single = |text: String| PromptInstance {
        strategy,
        entry_id: entry.id,
        messages: vec![Message::user(text)],
        chain_position: None,
    };
    Ok(match strategy {
        Strategy::Bp1 => vec![single(fill(&catalog.bp1))],
        Strategy::Bp2 => vec![single(fill(&catalog.bp2))],
        Strategy::Ap1 => vec![single(fill(&catalog.ap1))],
        Strategy::Ap2 => vec![
            PromptInstance {
                strategy,
                entry_id: entry.id,
                messages: vec![Message::user(fill(&catalog.ap2_chain1))],
                chain_position: Some(0),
            },
            PromptInstance {
                strategy,
                entry_id: entry.id,
                messages: vec![Message::user(catalog.ap2_chain2.clone())],
                chain_position: Some(1),
            },
        ],
        Strategy::BasicFt | Strategy::AdvancedFt => unreachable!(),
    })
}

/// One supervised fine-tuning record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtPair {
    pub prompt: String,
    pub response: String,
}

/// Builds the prompt/response pair for one entry.
///
/// `BasicFt` answers a bare `yes`/`no`. `AdvancedFt` answers `no` for
/// race-free entries and otherwise `"yes",` followed by one JSON object per
/// variable pair (names, line numbers against the trimmed code, and
/// `write`/`read` operation words).
pub fn make_ft_pairs(
    entry: &DrbMlEntry,
    kind: Strategy,
    catalog: &TemplateCatalog,
) -> Result<FtPair, PromptError> {
    if !kind.is_fine_tuning() {
        return Err(PromptError::UnsupportedStrategy { strategy: kind });
    }
    if entry.trimmed_code.is_empty() {
        return Err(PromptError::EmptyCode {
            entry_id: entry.id,
        });
    }
    let template = match kind {
        Strategy::BasicFt => &catalog.basic_ft,
        _ => &catalog.advanced_ft,
    };
    let prompt = template.replacen(CODE_SLOT, &entry.trimmed_code, 1);
    let response = match kind {
        Strategy::BasicFt => if entry.has_race() { "yes" } else { "no" }.to_string(),
        _ if !entry.has_race() => "no".to_string(),
        _ => advanced_response(entry.pairs_for_trimmed_code()),
    };
    Ok(FtPair { prompt, response })
}

fn advanced_response(pairs: &[VarPair]) -> String {
    let mut out = String::from("\"yes\",");
    for (i, pair) in pairs.iter().enumerate() {
        out.push('\n');
        out.push_str(&pair_object(pair));
        if i + 1 < pairs.len() {
            out.push(',');
        }
    }
    out
}

fn pair_object(pair: &VarPair) -> String {
    let name = |i: usize| serde_json::to_string(&pair.names[i]).unwrap();
    let op = |i: usize| match pair.operations[i] {
        Operation::Write => "\"write\"",
        Operation::Read => "\"read\"",
    };
    format!(
        "{{\n    \"data_race\": 1,\n    \"variable_names\": [{}, {}],\n    \"variable_locations\": [{}, {}],\n    \"operation_types\": [{}, {}]\n}}",
        name(0),
        name(1),
        pair.lines[0],
        pair.lines[1],
        op(0),
        op(1)
    )
}

/// Writes one JSONL line per entry; returns the number of pairs written.
pub fn export_ft_dataset(
    entries: &[DrbMlEntry],
    kind: Strategy,
    path: &Path,
    catalog: &TemplateCatalog,
) -> Result<usize, PromptError> {
    let io_err = |source| PromptError::WriteIo {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    let mut count = 0;
    for entry in entries {
        let pair = make_ft_pairs(entry, kind, catalog)?;
        let line = serde_json::to_string(&pair).expect("FtPair serializes");
        writeln!(file, "{line}").map_err(io_err)?;
        count += 1;
    }
    Ok(count)
}
