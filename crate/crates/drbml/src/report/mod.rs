//! Run persistence and result tables.
//!
//! A run lives in `runs/<run_id>/`: `config.json` snapshots the setup,
//! `responses.jsonl` holds one record per entry (full response text, so
//! parser upgrades can be replayed without re-querying models), and
//! `scores.json` accumulates scoring passes. Runs are append-only.

mod store;
mod table;

pub use store::{load_run, new_run_id, run_exists, save_run, write_scores};
pub use table::{render_crossval_table, render_table, TableFormat};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{
    ConfusionCounts, IndeterminatePolicy, MatchPolicy, MetricsReport, ScoreCell, Task,
};
use crate::llm::{BatchItem, ModelConfig};
use crate::parse::Verdict;
use crate::prompts::Strategy;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("run `{run_id}` already exists in the store")]
    RunExists { run_id: String },
    #[error("run `{run_id}` not found in the store")]
    RunNotFound { run_id: String },
    #[error("I/O failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed run artifact {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Immutable description of one run, written once at save time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfigRecord {
    pub run_id: String,
    pub created_at: String,
    pub strategy: Strategy,
    pub model_name: String,
    pub backend: String,
    pub config: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_dir: Option<String>,
    pub entry_count: usize,
}

/// One entry's response (or failure) within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResponseRecord {
    pub entry_id: u32,
    pub request_digest: String,
    pub cache_hit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_texts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&BatchItem> for EntryResponseRecord {
    fn from(item: &BatchItem) -> Self {
        match &item.outcome {
            Ok(response) => Self {
                entry_id: item.entry_id,
                request_digest: response.request_digest.clone(),
                cache_hit: response.cache_hit,
                text: Some(response.text.clone()),
                chain_texts: response.chain_texts.clone(),
                error: None,
            },
            Err(error) => Self {
                entry_id: item.entry_id,
                request_digest: String::new(),
                cache_hit: false,
                text: None,
                chain_texts: None,
                error: Some(error.to_string()),
            },
        }
    }
}

/// Per-entry scoring outcome stored alongside the counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryCellRecord {
    pub entry_id: u32,
    pub verdict: Verdict,
    pub cell: ScoreCell,
}

/// One scoring pass over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub task: Task,
    pub indeterminate_policy: IndeterminatePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_policy: Option<MatchPolicy>,
    pub counts: ConfusionCounts,
    pub metrics: MetricsReport,
    pub excluded: usize,
    pub cells: Vec<EntryCellRecord>,
}

/// A run as materialized from the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfigRecord,
    pub responses: Vec<EntryResponseRecord>,
    #[serde(default)]
    pub scores: Vec<ScoreRecord>,
}
