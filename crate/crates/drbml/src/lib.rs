//! Toolkit for evaluating LLM-based data race detection on OpenMP
//! microbenchmark suites.
//!
//! The pipeline runs in five stages, one module each:
//!
//! * [`corpus`] compiles DataRaceBench-style C/C++ sources into structured
//!   JSON entries: comments stripped, race annotations parsed into variable
//!   pairs, entries validated and filtered by token budget.
//! * [`prompts`] renders the detection prompt strategies and the
//!   fine-tuning prompt/response pairs from those entries.
//! * [`llm`] executes rendered prompts against pluggable chat-completion
//!   backends with retries, a replay cache, and bounded parallelism.
//! * [`parse`] turns free-text model output back into yes/no verdicts and
//!   variable pairs.
//! * [`eval`] scores verdicts against ground truth: confusion counts,
//!   recall/precision/F1, pair matching, and stratified k-fold plans.
//! * [`report`] persists runs on disk and renders result tables.

pub mod corpus;
pub mod eval;
pub mod llm;
pub mod parse;
pub mod prompts;
pub mod report;
