//! Benchmark report CSV and run-log emission.

use std::path::Path;

use super::{EvalReport, PipelineError};
use crate::metrics::MetricsRow;

pub const REPORT_HEADER: &str = "Model,MSE,RMSE,MAE,MAPE,R2";

/// One metric cell at report precision (3 decimals, no negative zero).
pub fn format_cell(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn report_csv_string(report: &EvalReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&row.model);
        match &row.outcome {
            Ok(m) => {
                for v in [m.mse, m.rmse, m.mae, m.mape, m.r2] {
                    out.push(',');
                    out.push_str(&format_cell(v));
                }
            }
            Err(_) => out.push_str(",failed,failed,failed,failed,failed"),
        }
        out.push('\n');
    }
    out
}

pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, report_csv_string(report)).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a report CSV back into rows; failed rows come back as `None`.
pub fn parse_report_csv(text: &str) -> Result<Vec<(String, Option<MetricsRow>)>, PipelineError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == REPORT_HEADER => {}
        other => {
            return Err(PipelineError::Report(format!(
                "unexpected report header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(PipelineError::Report(format!(
                "row {}: expected 6 cells, got {}",
                lineno + 2,
                cells.len()
            )));
        }
        if cells[1..].contains(&"failed") {
            rows.push((cells[0].to_string(), None));
            continue;
        }
        let mut vals = [0.0; 5];
        for (slot, cell) in vals.iter_mut().zip(&cells[1..]) {
            *slot = cell.parse().map_err(|_| {
                PipelineError::Report(format!("row {}: bad number `{cell}`", lineno + 2))
            })?;
        }
        rows.push((
            cells[0].to_string(),
            Some(MetricsRow {
                mse: vals[0],
                rmse: vals[1],
                mae: vals[2],
                mape: vals[3],
                r2: vals[4],
            }),
        ));
    }
    Ok(rows)
}

/// Reproducibility metadata plus per-model timing; wall-clock lines make
/// this the one emitted file that is not byte-deterministic.
pub fn run_log_string(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("seed={}\n", report.seed));
    out.push_str(&format!("config_digest={}\n", report.config_digest));
    out.push_str(&format!("split_digest={}\n", report.split_digest));
    out.push_str(&format!("train_size={}\n", report.train_size));
    out.push_str(&format!("validation_size={}\n", report.validation_size));
    for row in &report.rows {
        match &row.outcome {
            Ok(m) => out.push_str(&format!(
                "model={} status=ok r2={} wall_ms={}\n",
                row.model,
                format_cell(m.r2),
                row.wall.as_millis()
            )),
            Err(reason) => out.push_str(&format!(
                "model={} status=failed wall_ms={} reason={}\n",
                row.model,
                row.wall.as_millis(),
                reason.replace('\n', " ")
            )),
        }
    }
    out
}

pub fn write_run_log(report: &EvalReport, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, run_log_string(report)).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}
