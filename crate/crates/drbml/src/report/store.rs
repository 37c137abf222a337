//! Filesystem run store.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EntryResponseRecord, ReportError, RunConfigRecord, RunRecord, ScoreRecord};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Builds a fresh run id: UTC timestamp plus a short content digest.
pub fn new_run_id(strategy: &str, model_name: &str) -> String {
    let now = chrono::Utc::now();
    let mut hasher = Sha256::new();
    hasher.update(strategy.as_bytes());
    hasher.update(model_name.as_bytes());
    hasher.update(now.timestamp_nanos_opt().unwrap_or_default().to_le_bytes());
    let digest = hex::encode(hasher.finalize());
    format!("{}-{}", now.format("%Y%m%dT%H%M%SZ"), &digest[..8])
}

pub fn run_exists(run_id: &str, store_dir: &Path) -> bool {
    store_dir.join(run_id).join("config.json").exists()
}

/// Persists a run directory; refuses to overwrite an existing run.
pub fn save_run(record: &RunRecord, store_dir: &Path) -> Result<(), ReportError> {
    let dir = store_dir.join(&record.config.run_id);
    if dir.exists() {
        return Err(ReportError::RunExists {
            run_id: record.config.run_id.clone(),
        });
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let config_path = dir.join("config.json");
    let mut config_json =
        serde_json::to_string_pretty(&record.config).map_err(|source| ReportError::Json {
            path: config_path.clone(),
            source,
        })?;
    config_json.push('\n');
    fs::write(&config_path, config_json).map_err(io_err(&config_path))?;

    let responses_path = dir.join("responses.jsonl");
    let mut file = fs::File::create(&responses_path).map_err(io_err(&responses_path))?;
    for response in &record.responses {
        let line = serde_json::to_string(response).map_err(|source| ReportError::Json {
            path: responses_path.clone(),
            source,
        })?;
        writeln!(file, "{line}").map_err(io_err(&responses_path))?;
    }

    if !record.scores.is_empty() {
        write_scores(&record.config.run_id, store_dir, &record.scores)?;
    }
    Ok(())
}

/// Rewrites the accumulated scoring passes for an existing run.
pub fn write_scores(
    run_id: &str,
    store_dir: &Path,
    scores: &[ScoreRecord],
) -> Result<(), ReportError> {
    if !run_exists(run_id, store_dir) {
        return Err(ReportError::RunNotFound {
            run_id: run_id.to_string(),
        });
    }
    let path = store_dir.join(run_id).join("scores.json");
    let mut json = serde_json::to_string_pretty(scores).map_err(|source| ReportError::Json {
        path: path.clone(),
        source,
    })?;
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))
}

/// Loads a run back from the store; round-trips what `save_run` wrote.
pub fn load_run(run_id: &str, store_dir: &Path) -> Result<RunRecord, ReportError> {
    let dir = store_dir.join(run_id);
    let config_path = dir.join("config.json");
    if !config_path.exists() {
        return Err(ReportError::RunNotFound {
            run_id: run_id.to_string(),
        });
    }
    let config_text = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
    let config: RunConfigRecord =
        serde_json::from_str(&config_text).map_err(|source| ReportError::Json {
            path: config_path,
            source,
        })?;

    let responses_path = dir.join("responses.jsonl");
    let responses_text = fs::read_to_string(&responses_path).map_err(io_err(&responses_path))?;
    let mut responses = Vec::new();
    for line in responses_text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EntryResponseRecord =
            serde_json::from_str(line).map_err(|source| ReportError::Json {
                path: responses_path.clone(),
                source,
            })?;
        responses.push(record);
    }

    let scores_path = dir.join("scores.json");
    let scores = if scores_path.exists() {
        let text = fs::read_to_string(&scores_path).map_err(io_err(&scores_path))?;
        serde_json::from_str(&text).map_err(|source| ReportError::Json {
            path: scores_path,
            source,
        })?
    } else {
        Vec::new()
    };

    Ok(RunRecord {
        config,
        responses,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{
        compute_metrics, ConfusionCounts, IndeterminatePolicy, ScoreCell, Task, ZeroDivPolicy,
    };
    use crate::llm::ModelConfig;
    use crate::parse::Verdict;
    use crate::prompts::Strategy;
    use crate::report::EntryCellRecord;

    fn sample_run(run_id: &str) -> RunRecord {
        let counts = ConfusionCounts::new(1, 0, 1, 0);
        RunRecord {
            config: RunConfigRecord {
                run_id: run_id.to_string(),
                created_at: "2024-01-01T00:00:00Z".to_string(),
                strategy: Strategy::Bp1,
                model_name: "test-model".to_string(),
                backend: "mock".to_string(),
                config: ModelConfig::new("test-model", "http://localhost"),
                dataset_dir: None,
                entry_count: 2,
            },
            responses: vec![
                EntryResponseRecord {
                    entry_id: 1,
                    request_digest: "d1".to_string(),
                    cache_hit: false,
                    text: Some("yes".to_string()),
                    chain_texts: None,
                    error: None,
                },
                EntryResponseRecord {
                    entry_id: 2,
                    request_digest: String::new(),
                    cache_hit: false,
                    text: None,
                    chain_texts: None,
                    error: Some("transport failure".to_string()),
                },
            ],
            scores: vec![ScoreRecord {
                task: Task::Detect,
                indeterminate_policy: IndeterminatePolicy::AsNo,
                match_policy: None,
                counts,
                metrics: compute_metrics(counts, ZeroDivPolicy::Undefined),
                excluded: 0,
                cells: vec![EntryCellRecord {
                    entry_id: 1,
                    verdict: Verdict::Yes,
                    cell: ScoreCell::Tp,
                }],
            }],
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let run = sample_run("run-abc");
        save_run(&run, dir.path()).unwrap();
        let loaded = load_run("run-abc", dir.path()).unwrap();
        assert_eq!(loaded, run);
    }

    #[test]
    fn runs_are_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let run = sample_run("run-abc");
        save_run(&run, dir.path()).unwrap();
        assert!(matches!(
            save_run(&run, dir.path()),
            Err(ReportError::RunExists { .. })
        ));
    }

    #[test]
    fn missing_run_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_run("nope", dir.path()),
            Err(ReportError::RunNotFound { .. })
        ));
    }

    #[test]
    fn scores_can_accumulate() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = sample_run("run-abc");
        save_run(&run, dir.path()).unwrap();
        let mut second = run.scores[0].clone();
        second.task = Task::Identify;
        run.scores.push(second);
        write_scores("run-abc", dir.path(), &run.scores).unwrap();
        let loaded = load_run("run-abc", dir.path()).unwrap();
        assert_eq!(loaded.scores.len(), 2);
        assert_eq!(loaded.scores[1].task, Task::Identify);
    }

    #[test]
    fn run_ids_are_unique_enough() {
        let a = new_run_id("bp1", "m");
        let b = new_run_id("bp1", "m");
        assert_ne!(a, b);
        assert!(a.contains('-'));
    }
}
