//! CSV tables and the plot specification.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{HarnessError, Result};
use crate::experiment::{ResultTable, RunResult};

pub const RAW_HEADER: [&str; 6] = ["algorithm", "seed", "t", "avg_cost", "cum_fit", "dual_norm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub algorithm: String,
    pub seed: u64,
    pub t: usize,
    pub avg_cost: f64,
    pub cum_fit: f64,
    pub dual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub axis_value: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and standard deviation (`n - 1` denominator, 0 for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-algorithm mean and std across seeds of time-average cost, final fit,
/// fit per node, peak dual norm and, when present, dynamic regret.
pub fn summarize(table: &ResultTable) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let nodes = table.nodes.max(1) as f64;
    for algo in table.algorithms() {
        let runs: Vec<&RunResult> = table.runs_of(algo).collect();
        let mut push = |metric: &str, values: Vec<f64>| {
            let (mean, std) = mean_std(&values);
            rows.push(SummaryRow {
                algorithm: algo.to_string(),
                axis_value: table.axis_value.clone(),
                metric: metric.to_string(),
                mean,
                std,
            });
        };
        push(
            "time_avg_cost",
            runs.iter().map(|r| r.time_average_cost()).collect(),
        );
        push("fit", runs.iter().map(|r| r.fit()).collect());
        push(
            "fit_per_node",
            runs.iter().map(|r| r.fit() / nodes).collect(),
        );
        push(
            "max_dual_norm",
            runs.iter().map(|r| r.max_dual_norm()).collect(),
        );
        if runs.iter().all(|r| r.regret.is_some()) {
            push(
                "dynamic_regret",
                runs.iter().filter_map(|r| r.regret).collect(),
            );
        }
    }
    rows
}

pub fn raw_rows(table: &ResultTable) -> impl Iterator<Item = RawRow> + '_ {
    table.runs.iter().flat_map(|r| {
        (0..r.avg_cost.len()).map(move |i| RawRow {
            algorithm: r.algorithm.clone(),
            seed: r.seed,
            t: i + 1,
            avg_cost: r.avg_cost[i],
            cum_fit: r.cum_fit[i],
            dual_norm: r.dual_norm[i],
        })
    })
}

/// Groups raw rows back into runs, in first-seen order.
pub fn runs_from_rows(rows: impl IntoIterator<Item = RawRow>) -> Vec<RunResult> {
    let mut runs: Vec<RunResult> = Vec::new();
    for row in rows {
        let same = runs
            .last()
            .is_some_and(|r| r.algorithm == row.algorithm && r.seed == row.seed);
        if !same {
            runs.push(RunResult {
                algorithm: row.algorithm.clone(),
                seed: row.seed,
                avg_cost: Vec::new(),
                cum_fit: Vec::new(),
                dual_norm: Vec::new(),
                regret: None,
            });
        }
        let run = runs.last_mut().expect("pushed above");
        run.avg_cost.push(row.avg_cost);
        run.cum_fit.push(row.cum_fit);
        run.dual_norm.push(row.dual_norm);
    }
    runs
}

pub fn read_raw(path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != RAW_HEADER {
        return Err(HarnessError::config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    Ok(reader
        .deserialize()
        .collect::<std::result::Result<Vec<RawRow>, _>>()?)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()?)
}

/// File name of a table's raw CSV.
pub fn raw_file_name(table: &ResultTable) -> String {
    if table.axis_value.is_empty() {
        "raw.csv".to_string()
    } else {
        format!("raw_{}.csv", table.axis_value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub raw: Vec<PathBuf>,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Writes the raw CSV of every table, one combined summary CSV and a
/// Vega-Lite plot specification into `dir`.
pub fn emit_outputs(tables: &[ResultTable], dir: &Path) -> Result<Written> {
    if tables.iter().all(|t| t.runs.is_empty()) {
        return Err(HarnessError::EmptyTable);
    }
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;

    let mut raw = Vec::new();
    for table in tables {
        let path = dir.join(raw_file_name(table));
        let mut w = csv::Writer::from_path(&path)?;
        for row in raw_rows(table) {
            w.serialize(row)?;
        }
        w.flush().map_err(HarnessError::io(&path))?;
        raw.push(path);
    }

    let summary = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    for table in tables {
        for row in summarize(table) {
            w.serialize(row)?;
        }
    }
    w.flush().map_err(HarnessError::io(&summary))?;

    let plot = dir.join("plots.vl.json");
    let names: Vec<String> = tables.iter().map(raw_file_name).collect();
    let text = serde_json::to_string_pretty(&plot_spec(&names))?;
    fs::write(&plot, text + "\n").map_err(HarnessError::io(&plot))?;

    Ok(Written { raw, summary, plot })
}

/// Vega-Lite concatenation of fit-vs-time and cost-vs-time line charts (mean
/// over seeds, first raw file) and per-axis-value bar charts of time-average
/// cost and fit per node.
pub fn plot_spec(raw_files: &[String]) -> serde_json::Value {
    let first = raw_files
        .first()
        .cloned()
        .unwrap_or_else(|| "raw.csv".into());
    let over_time = |field: &str, title: &str, transform: serde_json::Value| {
        json!({
            "title": title,
            "data": {"url": first},
            "transform": transform,
            "mark": "line",
            "encoding": {
                "x": {"field": "t", "type": "quantitative", "title": "slot"},
                "y": {"aggregate": "mean", "field": field, "type": "quantitative"},
                "color": {"field": "algorithm", "type": "nominal"}
            }
        })
    };
    let running_mean = json!([{
        "window": [{"op": "mean", "field": "avg_cost", "as": "time_avg_cost"}],
        "groupby": ["algorithm", "seed"],
        "sort": [{"field": "t"}],
        "frame": [null, 0]
    }]);
    let bars = |metric: &str, title: &str| {
        json!({
            "title": title,
            "data": {"url": "summary.csv"},
            "transform": [{"filter": {"field": "metric", "equal": metric}}],
            "mark": "bar",
            "encoding": {
                "x": {"field": "axis_value", "type": "ordinal", "title": "sweep value"},
                "xOffset": {"field": "algorithm"},
                "y": {"field": "mean", "type": "quantitative", "title": metric},
                "color": {"field": "algorithm", "type": "nominal"}
            }
        })
    };
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "vconcat": [
            over_time("cum_fit", "Dynamic fit", json!([])),
            over_time("time_avg_cost", "Time-average cost", running_mean),
            bars("time_avg_cost", "Time-average cost by sweep value"),
            bars("fit_per_node", "Fit per node by sweep value")
        ]
    })
}
