//! `drbml`: build, render, run, and score data race detection experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use drbml::corpus::CorpusError;
use drbml::eval::{EvalError, IndeterminatePolicy, Task};
use drbml::llm::LlmError;
use drbml::prompts::{PromptError, Strategy};
use drbml::report::ReportError;

#[derive(Parser)]
#[command(
    name = "drbml",
    version,
    about = "Dataset builder, prompt runner, and scorer for LLM data race detection on OpenMP microbenchmarks"
)]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit machine-readable JSON instead of human-oriented text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a directory of benchmark sources into DRB-ML JSON entries.
    Build {
        /// Directory of `DRB<index>-<mnemonic>-<yes|no>.c` sources.
        #[arg(long)]
        src: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON sidecar mapping filenames to data_race_label values.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Emit the token-budget subset manifest for a dataset.
    Filter {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Keep entries strictly below this estimated token count.
        #[arg(long)]
        budget: Option<usize>,
        /// Write the manifest here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render prompts or fine-tuning pairs for every entry to JSONL.
    Render {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_parser = Strategy::from_str)]
        strategy: Strategy,
        /// Output JSONL path.
        #[arg(long)]
        out: PathBuf,
        /// Use templates with the original spelling mistakes corrected.
        #[arg(long)]
        normalized_templates: bool,
        /// Load templates from a directory instead of the built-ins.
        #[arg(long)]
        templates_dir: Option<PathBuf>,
    },
    /// Execute a strategy over a dataset against a backend; save the run.
    Run {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_parser = Strategy::from_str)]
        strategy: Strategy,
        /// Model alias from the config file, or a bare model name.
        #[arg(long, default_value = "mock-model")]
        model: String,
        #[arg(long, value_enum)]
        backend: BackendKind,
        /// Chat-completion endpoint URL (http backend).
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
        /// Filter the dataset to entries under this token budget first.
        #[arg(long)]
        token_budget: Option<usize>,
        /// Abort the run after this many backend requests.
        #[arg(long)]
        max_requests: Option<usize>,
        /// Paste chain step one's answer into step two instead of using
        /// conversational context.
        #[arg(long)]
        interpolated_chain: bool,
        #[arg(long)]
        normalized_templates: bool,
        #[arg(long)]
        templates_dir: Option<PathBuf>,
    },
    /// Parse a saved run's responses and score them against a dataset.
    Score {
        /// Run id under the runs directory.
        #[arg(long)]
        run: String,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_parser = Task::from_str, default_value = "detect")]
        task: Task,
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        #[command(flatten)]
        scoring: ScoringFlags,
    },
    /// Plan stratified folds and aggregate per-fold metrics across runs.
    Crossval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = Task::from_str, default_value = "detect")]
        task: Task,
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        /// Saved run ids to score per fold; with none, print the plan only.
        run_ids: Vec<String>,
        #[command(flatten)]
        scoring: ScoringFlags,
    },
}

#[derive(Debug, Clone, clap::Args)]
struct ScoringFlags {
    /// How indeterminate verdicts are binned: as-no, as-yes, as-wrong, exclude.
    #[arg(long, value_parser = IndeterminatePolicy::from_str)]
    indeterminate: Option<IndeterminatePolicy>,
    /// Allowed line-number difference when matching pairs.
    #[arg(long)]
    line_tolerance: Option<u32>,
    /// Compare variable names byte-for-byte instead of whitespace-insensitively.
    #[arg(long)]
    name_exact: bool,
    /// Match pairs on names alone, ignoring line numbers.
    #[arg(long)]
    no_require_lines: bool,
    /// Ignore read/write operations when matching pairs.
    #[arg(long)]
    no_require_operations: bool,
    /// Require column numbers to match as well.
    #[arg(long)]
    require_cols: bool,
    /// Forbid the two sides of a pair from swapping.
    #[arg(long)]
    order_sensitive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    /// Live JSON chat-completion endpoint.
    Http,
    /// Serve responses from the replay cache; error on a miss.
    Replay,
    /// Deterministic ground-truth answers derived from the dataset.
    MockOracle,
    /// Ground truth with every answer inverted.
    MockComplement,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(error) => {
            eprintln!("error: {error:#}");
            exit_code(&error)
        }
    }
}

/// Exit codes: 0 success, 1 usage, 2 data error, 3 backend error.
fn exit_code(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if let Some(llm) = cause.downcast_ref::<LlmError>() {
            return match llm {
                LlmError::Prompt(_) | LlmError::InvalidConfig { .. } => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<CorpusError>().is_some()
            || cause.downcast_ref::<EvalError>().is_some()
            || cause.downcast_ref::<ReportError>().is_some()
            || cause.downcast_ref::<PromptError>().is_some()
        {
            return 2;
        }
    }
    2
}
