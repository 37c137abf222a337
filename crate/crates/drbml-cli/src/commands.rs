//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use drbml::corpus::{
    build_entry, filter_by_token_budget, load_dataset, load_label_sidecar, parse_filename,
    write_dataset, CharsPerTokenEstimator, DrbMlEntry, Microbenchmark, Severity, TokenEstimator,
};
use drbml::eval::{
    aggregate, compute_metrics, make_folds, score_detection, score_variable_identification,
    IndeterminatePolicy, MatchPolicy, NameNormalization, SdMode, Task, ZeroDivPolicy,
};
use drbml::llm::{
    Backend, ChainMode, HttpChatBackend, OracleBackend, OracleMode, OracleSchema, ReplayBackend,
    ReplayCache, RequestBudget, Runner,
};
use drbml::parse::{parse_response, ParsedVerdict, Verdict};
use drbml::prompts::{export_ft_dataset, render, Strategy, TemplateCatalog};
use drbml::report::{
    load_run, new_run_id, render_crossval_table, render_table, save_run, write_scores,
    EntryCellRecord, EntryResponseRecord, RunConfigRecord, RunRecord, ScoreRecord, TableFormat,
};

use crate::config::AppConfig;
use crate::{BackendKind, Cli, Command, ScoringFlags};

pub fn dispatch(cli: Cli) -> Result<()> {
    let config = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Build { src, out, labels } => cmd_build(&src, &out, labels.as_deref(), cli.json),
        Command::Filter {
            dataset,
            budget,
            out,
        } => cmd_filter(dataset, budget, out.as_deref(), &config, cli.json),
        Command::Render {
            dataset,
            strategy,
            out,
            normalized_templates,
            templates_dir,
        } => {
            let catalog = catalog_for(normalized_templates, templates_dir.as_deref(), &config)?;
            cmd_render(dataset, strategy, &out, &catalog, &config, cli.json)
        }
        Command::Run {
            dataset,
            strategy,
            model,
            backend,
            endpoint,
            cache_dir,
            runs_dir,
            parallelism,
            token_budget,
            max_requests,
            interpolated_chain,
            normalized_templates,
            templates_dir,
        } => {
            let catalog = catalog_for(normalized_templates, templates_dir.as_deref(), &config)?;
            cmd_run(RunArgs {
                dataset,
                strategy,
                model,
                backend,
                endpoint,
                cache_dir,
                runs_dir,
                parallelism,
                token_budget,
                max_requests,
                interpolated_chain,
                catalog,
                config: &config,
                json: cli.json,
            })
        }
        Command::Score {
            run,
            dataset,
            task,
            runs_dir,
            scoring,
        } => cmd_score(&run, dataset, task, runs_dir, &scoring, &config, cli.json),
        Command::Crossval {
            dataset,
            k,
            seed,
            task,
            runs_dir,
            run_ids,
            scoring,
        } => cmd_crossval(
            dataset, k, seed, task, runs_dir, &run_ids, &scoring, &config, cli.json,
        ),
    }
}

fn catalog_for(
    normalized: bool,
    templates_dir: Option<&Path>,
    config: &AppConfig,
) -> Result<TemplateCatalog> {
    let dir = templates_dir.or(config.run.templates_dir.as_deref());
    match dir {
        Some(dir) => {
            if normalized {
                bail!("--normalized-templates cannot be combined with --templates-dir");
            }
            Ok(TemplateCatalog::from_dir(dir)?)
        }
        None if normalized => Ok(TemplateCatalog::normalized()),
        None => Ok(TemplateCatalog::builtin()),
    }
}

fn dataset_dir(flag: Option<PathBuf>, config: &AppConfig) -> Result<PathBuf> {
    flag.or_else(|| config.dataset.dir.clone())
        .ok_or_else(|| anyhow!("no dataset directory: pass --dataset or set [dataset].dir"))
}

fn load_entries(flag: Option<PathBuf>, config: &AppConfig) -> Result<(PathBuf, Vec<DrbMlEntry>)> {
    let dir = dataset_dir(flag, config)?;
    let entries = load_dataset(&dir)
        .with_context(|| format!("failed to load dataset from {}", dir.display()))?;
    if entries.is_empty() {
        bail!("dataset at {} contains no entries", dir.display());
    }
    Ok((dir, entries))
}

fn cmd_build(src: &Path, out: &Path, labels: Option<&Path>, json: bool) -> Result<()> {
    let sidecar = match labels {
        Some(path) => load_label_sidecar(path)
            .with_context(|| format!("failed to read label sidecar {}", path.display()))?,
        None => BTreeMap::new(),
    };
    let mut sources: Vec<PathBuf> = fs::read_dir(src)
        .with_context(|| format!("cannot read source directory {}", src.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext == "c" || ext == "cpp")
        })
        .collect();
    sources.sort();
    if sources.is_empty() {
        bail!("no .c or .cpp benchmark sources in {}", src.display());
    }

    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = BTreeMap::new();
    for path in &sources {
        let bench = Microbenchmark::from_path(path)?;
        let (id, _, _) = parse_filename(&bench.filename)
            .with_context(|| format!("while building {}", path.display()))?;
        if let Some(previous) = seen.insert(id, bench.filename.clone()) {
            bail!(
                "benchmark index {id} used by both {previous} and {}",
                bench.filename
            );
        }
        let label = sidecar.get(&bench.filename).map(String::as_str);
        let built = build_entry(&bench, id, label)
            .with_context(|| format!("while building {}", path.display()))?;
        for diag in &built.diagnostics {
            diagnostics.push((bench.filename.clone(), diag.clone()));
        }
        entries.push(built.entry);
    }
    entries.sort_by_key(|e| e.id);
    write_dataset(&entries, out)?;

    let errors = diagnostics
        .iter()
        .filter(|(_, d)| d.severity == Severity::Error)
        .count();
    if json {
        println!(
            "{}",
            json!({
                "entries": entries.len(),
                "out_dir": out.display().to_string(),
                "diagnostics": diagnostics
                    .iter()
                    .map(|(file, d)| json!({"file": file, "severity": d.severity, "message": d.message}))
                    .collect::<Vec<_>>(),
            })
        );
    } else {
        for (file, diag) in &diagnostics {
            eprintln!("{file}: {diag}");
        }
        println!(
            "built {} entries into {} ({} diagnostics)",
            entries.len(),
            out.display(),
            diagnostics.len()
        );
    }
    if errors > 0 {
        bail!("{errors} entries violate dataset invariants");
    }
    Ok(())
}

fn cmd_filter(
    dataset: Option<PathBuf>,
    budget: Option<usize>,
    out: Option<&Path>,
    config: &AppConfig,
    json: bool,
) -> Result<()> {
    let (_, entries) = load_entries(dataset, config)?;
    let budget = budget.or(config.dataset.token_budget).unwrap_or(4096);
    if budget == 0 {
        bail!("token budget must be positive");
    }
    let estimator = CharsPerTokenEstimator::default();
    let kept = filter_by_token_budget(&entries, budget, &estimator);
    let kept_ids: std::collections::BTreeSet<u32> = kept.iter().map(|e| e.id).collect();
    let describe = |e: &DrbMlEntry| {
        json!({"id": e.id, "name": e.name, "tokens": estimator.estimate(&e.trimmed_code)})
    };
    let manifest = json!({
        "budget": budget,
        "estimator": format!("chars/{}", estimator.chars_per_token),
        "total": entries.len(),
        "kept": entries.iter().filter(|e| kept_ids.contains(&e.id)).map(describe).collect::<Vec<_>>(),
        "dropped": entries.iter().filter(|e| !kept_ids.contains(&e.id)).map(describe).collect::<Vec<_>>(),
    });
    let rendered = serde_json::to_string_pretty(&manifest)?;
    if let Some(path) = out {
        fs::write(path, format!("{rendered}\n"))
            .with_context(|| format!("cannot write manifest to {}", path.display()))?;
    }
    if json {
        println!("{rendered}");
    } else {
        println!(
            "kept {} of {} entries under a {budget}-token budget",
            kept.len(),
            entries.len()
        );
    }
    Ok(())
}

fn cmd_render(
    dataset: Option<PathBuf>,
    strategy: Strategy,
    out: &Path,
    catalog: &TemplateCatalog,
    config: &AppConfig,
    json: bool,
) -> Result<()> {
    let (_, entries) = load_entries(dataset, config)?;
    let count = if strategy.is_fine_tuning() {
        export_ft_dataset(&entries, strategy, out, catalog)?
    } else {
        let mut lines = Vec::new();
        for entry in &entries {
            for instance in render(strategy, entry, catalog)? {
                lines.push(serde_json::to_string(&instance)?);
            }
        }
        fs::write(out, lines.join("\n") + "\n")
            .with_context(|| format!("cannot write prompts to {}", out.display()))?;
        lines.len()
    };
    if json {
        println!(
            "{}",
            json!({"strategy": strategy, "count": count, "out": out.display().to_string()})
        );
    } else {
        println!("wrote {count} {strategy} records to {}", out.display());
    }
    Ok(())
}

struct RunArgs<'a> {
    dataset: Option<PathBuf>,
    strategy: Strategy,
    model: String,
    backend: BackendKind,
    endpoint: Option<String>,
    cache_dir: Option<PathBuf>,
    runs_dir: Option<PathBuf>,
    parallelism: Option<usize>,
    token_budget: Option<usize>,
    max_requests: Option<usize>,
    interpolated_chain: bool,
    catalog: TemplateCatalog,
    config: &'a AppConfig,
    json: bool,
}

fn oracle_schema(strategy: Strategy) -> OracleSchema {
    if strategy.expects_pairs() {
        OracleSchema::Advanced
    } else {
        OracleSchema::Basic
    }
}

fn cmd_run(args: RunArgs<'_>) -> Result<()> {
    let (dataset_dir, mut entries) = load_entries(args.dataset, args.config)?;
    if let Some(budget) = args.token_budget {
        entries = filter_by_token_budget(&entries, budget, &CharsPerTokenEstimator::default());
        if entries.is_empty() {
            bail!("token budget {budget} filtered out every entry");
        }
    }
    let model_config = args.config.model(&args.model, args.endpoint.as_deref());
    model_config.validate()?;

    let cache_dir = args
        .cache_dir
        .or_else(|| args.config.run.cache_dir.clone())
        .unwrap_or_else(|| PathBuf::from("cache"));
    let cache = ReplayCache::at(&cache_dir)?;

    let backend: Box<dyn Backend> = match args.backend {
        BackendKind::Http => Box::new(HttpChatBackend::new(&model_config)?),
        BackendKind::Replay => Box::new(ReplayBackend::new(ReplayCache::at(&cache_dir)?)),
        BackendKind::MockOracle => Box::new(OracleBackend::new(
            entries.clone(),
            oracle_schema(args.strategy),
            OracleMode::Truthful,
        )),
        BackendKind::MockComplement => Box::new(OracleBackend::new(
            entries.clone(),
            oracle_schema(args.strategy),
            OracleMode::Complement,
        )),
    };

    let budget = args.max_requests.map(RequestBudget::new);
    let mut runner = Runner::new(backend.as_ref(), &model_config, &args.catalog);
    if args.backend != BackendKind::Replay {
        runner = runner.with_cache(&cache);
    }
    if let Some(budget) = &budget {
        runner = runner.with_budget(budget);
    }
    if args.interpolated_chain {
        runner = runner.with_chain_mode(ChainMode::Interpolated);
    }

    let parallelism = args
        .parallelism
        .or(args.config.run.parallelism)
        .unwrap_or(4);
    let items = runner.run_batch(&entries, args.strategy, parallelism);
    let failed = items.iter().filter(|i| i.outcome.is_err()).count();
    let responses: Vec<EntryResponseRecord> =
        items.iter().map(EntryResponseRecord::from).collect();

    let runs_dir = args
        .runs_dir
        .or_else(|| args.config.run.runs_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let run_id = new_run_id(args.strategy.as_str(), &model_config.model_name);
    let record = RunRecord {
        config: RunConfigRecord {
            run_id: run_id.clone(),
            created_at: chrono::Utc::now().to_rfc3339(),
            strategy: args.strategy,
            model_name: model_config.model_name.clone(),
            backend: backend.name().to_string(),
            config: model_config,
            dataset_dir: Some(dataset_dir.display().to_string()),
            entry_count: entries.len(),
        },
        responses,
        scores: Vec::new(),
    };
    save_run(&record, &runs_dir)?;

    if args.json {
        println!(
            "{}",
            json!({
                "run_id": run_id,
                "strategy": args.strategy,
                "model": record.config.model_name,
                "backend": record.config.backend,
                "entries": entries.len(),
                "failed": failed,
            })
        );
    } else {
        println!(
            "run {run_id}: {} entries via {} backend, {failed} failures",
            entries.len(),
            record.config.backend
        );
    }
    Ok(())
}

fn match_policy_from(flags: &ScoringFlags) -> MatchPolicy {
    MatchPolicy {
        name_normalization: if flags.name_exact {
            NameNormalization::Exact
        } else {
            NameNormalization::WhitespaceInsensitive
        },
        require_lines: !flags.no_require_lines,
        line_tolerance: flags.line_tolerance.unwrap_or(0),
        require_operations: !flags.no_require_operations,
        require_cols: flags.require_cols,
        order_insensitive: !flags.order_sensitive,
    }
}

fn indeterminate_from(flags: &ScoringFlags, config: &AppConfig) -> Result<IndeterminatePolicy> {
    if let Some(policy) = flags.indeterminate {
        return Ok(policy);
    }
    match &config.eval.indeterminate {
        Some(text) => text
            .parse()
            .map_err(|e: String| anyhow!("config [eval].indeterminate: {e}")),
        None => Ok(IndeterminatePolicy::default()),
    }
}

/// Parses every stored response; failures become indeterminate verdicts.
fn run_verdicts(record: &RunRecord) -> Vec<(u32, ParsedVerdict)> {
    record
        .responses
        .iter()
        .map(|response| {
            let parsed = match &response.text {
                Some(text) => parse_response(text),
                None => ParsedVerdict {
                    verdict: Verdict::Indeterminate,
                    pairs: Vec::new(),
                    diagnostics: vec![format!(
                        "no response recorded: {}",
                        response.error.as_deref().unwrap_or("unknown failure")
                    )],
                    source_span: None,
                },
            };
            (response.entry_id, parsed)
        })
        .collect()
}

fn score_results(
    results: &[(u32, ParsedVerdict)],
    truth: &[DrbMlEntry],
    task: Task,
    match_policy: &MatchPolicy,
    indeterminate: IndeterminatePolicy,
) -> Result<ScoreRecord> {
    let score = match task {
        Task::Detect => score_detection(results, truth, indeterminate)?,
        Task::Identify => {
            score_variable_identification(results, truth, match_policy, indeterminate)?
        }
    };
    let cells = score
        .cells
        .iter()
        .zip(results)
        .map(|((entry_id, cell), (_, parsed))| EntryCellRecord {
            entry_id: *entry_id,
            verdict: parsed.verdict,
            cell: *cell,
        })
        .collect();
    Ok(ScoreRecord {
        task,
        indeterminate_policy: indeterminate,
        match_policy: match task {
            Task::Detect => None,
            Task::Identify => Some(*match_policy),
        },
        counts: score.counts,
        metrics: compute_metrics(score.counts, ZeroDivPolicy::Undefined),
        excluded: score.excluded,
        cells,
    })
}

fn cmd_score(
    run_id: &str,
    dataset: Option<PathBuf>,
    task: Task,
    runs_dir: Option<PathBuf>,
    flags: &ScoringFlags,
    config: &AppConfig,
    json: bool,
) -> Result<()> {
    let runs_dir = runs_dir
        .or_else(|| config.run.runs_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let mut record = load_run(run_id, &runs_dir)?;
    let (_, entries) = load_entries(dataset, config)?;
    let results = run_verdicts(&record);
    let score = score_results(
        &results,
        &entries,
        task,
        &match_policy_from(flags),
        indeterminate_from(flags, config)?,
    )?;
    record.scores.push(score.clone());
    write_scores(run_id, &runs_dir, &record.scores)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&score)?);
    } else {
        print!("{}", render_table(&[record], TableFormat::Markdown));
        if score.excluded > 0 {
            println!("({} indeterminate entries excluded)", score.excluded);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_crossval(
    dataset: Option<PathBuf>,
    k: Option<usize>,
    seed: Option<u64>,
    task: Task,
    runs_dir: Option<PathBuf>,
    run_ids: &[String],
    flags: &ScoringFlags,
    config: &AppConfig,
    json: bool,
) -> Result<()> {
    let (_, entries) = load_entries(dataset, config)?;
    let k = k.or(config.eval.fold_k).unwrap_or(5);
    let seed = seed.or(config.eval.fold_seed).unwrap_or(7);
    let plan = make_folds(&entries, k, seed)?;
    let runs_dir = runs_dir
        .or_else(|| config.run.runs_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let match_policy = match_policy_from(flags);
    let indeterminate = indeterminate_from(flags, config)?;

    let mut rows = Vec::new();
    for run_id in run_ids {
        let record = load_run(run_id, &runs_dir)?;
        let verdicts: BTreeMap<u32, ParsedVerdict> = run_verdicts(&record).into_iter().collect();
        let mut per_fold = Vec::new();
        for fold in &plan.folds {
            let results: Vec<(u32, ParsedVerdict)> = fold
                .entry_ids
                .iter()
                .map(|id| {
                    let parsed = verdicts.get(id).cloned().unwrap_or(ParsedVerdict {
                        verdict: Verdict::Indeterminate,
                        pairs: Vec::new(),
                        diagnostics: vec!["entry missing from run".to_string()],
                        source_span: None,
                    });
                    (*id, parsed)
                })
                .collect();
            let score = score_results(&results, &entries, task, &match_policy, indeterminate)?;
            per_fold.push(score.metrics);
        }
        let label = format!("{}/{}", record.config.model_name, record.config.strategy);
        rows.push((label, aggregate(&per_fold, SdMode::Population)));
    }

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "plan": plan,
                "task": task,
                "rows": rows
                    .iter()
                    .map(|(label, agg)| json!({"label": label, "aggregate": agg}))
                    .collect::<Vec<_>>(),
            }))?
        );
    } else {
        let profile: Vec<String> = plan
            .folds
            .iter()
            .map(|f| format!("{}+{}", f.positives, f.negatives))
            .collect();
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.entry_ids.len()).collect();
        println!(
            "fold plan (k={k}, seed={seed}): sizes {sizes:?}, class split [{}]",
            profile.join(", ")
        );
        if !rows.is_empty() {
            print!("{}", render_crossval_table(&rows, TableFormat::Markdown));
        }
    }
    Ok(())
}
