//! Result table rendering in markdown and CSV.

use std::fmt::Write as _;

use crate::eval::{round_half_up, AggregateReport, MetricsReport};

use super::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

struct Row {
    model: String,
    prompt: String,
    metrics: MetricsReport,
}

fn rows_from_records(records: &[RunRecord]) -> Vec<Row> {
    let mut rows: Vec<Row> = records
        .iter()
        .flat_map(|record| {
            record.scores.iter().map(|score| Row {
                model: record.config.model_name.clone(),
                prompt: format!("{}/{}", record.config.strategy, score.task),
                metrics: score.metrics,
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.model, &a.prompt).cmp(&(&b.model, &b.prompt)));
    rows
}

fn fmt3(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.3}", round_half_up(v, 3)),
        None => "-".to_string(),
    }
}

/// Full-precision float that re-parses to the same value.
fn fmt_raw(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// Renders one row per scoring pass with TP/FP/TN/FN/R/P/F1 columns.
///
/// Markdown output groups consecutive rows of the same model and bolds the
/// best defined value of each metric column. CSV output keeps raw
/// full-precision metric values.
pub fn render_table(records: &[RunRecord], format: TableFormat) -> String {
    let rows = rows_from_records(records);
    match format {
        TableFormat::Csv => {
            let mut out = String::from("model,prompt,tp,fp,tn,fn,recall,precision,f1\n");
            for row in &rows {
                let c = row.metrics.counts;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    row.model,
                    row.prompt,
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    fmt_raw(row.metrics.recall),
                    fmt_raw(row.metrics.precision),
                    fmt_raw(row.metrics.f1)
                )
                .expect("write to string");
            }
            out
        }
        TableFormat::Markdown => {
            let best = |select: fn(&MetricsReport) -> Option<f64>| -> Option<f64> {
                rows.iter()
                    .filter_map(|r| select(&r.metrics))
                    .max_by(|a, b| a.total_cmp(b))
            };
            let best_r = best(|m| m.recall);
            let best_p = best(|m| m.precision);
            let best_f1 = best(|m| m.f1);
            let metric_cell = |value: Option<f64>, best: Option<f64>| -> String {
                let text = fmt3(value);
                match (value, best) {
                    (Some(v), Some(b)) if v == b => format!("**{text}**"),
                    _ => text,
                }
            };
            let mut out = String::from("| Model | Prompt | TP | FP | TN | FN | R | P | F1 |\n");
            out.push_str("|---|---|---|---|---|---|---|---|---|\n");
            let mut previous_model: Option<&str> = None;
            for row in &rows {
                let model_cell = if previous_model == Some(row.model.as_str()) {
                    ""
                } else {
                    row.model.as_str()
                };
                previous_model = Some(row.model.as_str());
                let c = row.metrics.counts;
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    model_cell,
                    row.prompt,
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    metric_cell(row.metrics.recall, best_r),
                    metric_cell(row.metrics.precision, best_p),
                    metric_cell(row.metrics.f1, best_f1)
                )
                .expect("write to string");
            }
            out
        }
    }
}

/// Renders AVG/SD columns for R, P, and F1, one row per labeled aggregate.
pub fn render_crossval_table(rows: &[(String, AggregateReport)], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut out =
                String::from("model,avg_r,sd_r,avg_p,sd_p,avg_f1,sd_f1,excluded_folds\n");
            for (label, agg) in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    label,
                    fmt_raw(agg.recall.avg),
                    fmt_raw(agg.recall.sd),
                    fmt_raw(agg.precision.avg),
                    fmt_raw(agg.precision.sd),
                    fmt_raw(agg.f1.avg),
                    fmt_raw(agg.f1.sd),
                    agg.recall.excluded.max(agg.precision.excluded).max(agg.f1.excluded)
                )
                .expect("write to string");
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = String::from(
                "| Model | AVG of R | SD of R | AVG of P | SD of P | AVG of F1 | SD of F1 |\n",
            );
            out.push_str("|---|---|---|---|---|---|---|\n");
            for (label, agg) in rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    label,
                    fmt3(agg.recall.avg),
                    fmt3(agg.recall.sd),
                    fmt3(agg.precision.avg),
                    fmt3(agg.precision.sd),
                    fmt3(agg.f1.avg),
                    fmt3(agg.f1.sd)
                )
                .expect("write to string");
            }
            out
        }
    }
}
