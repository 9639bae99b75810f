//! CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;
use varipade::benchmarks::CaseTable;
use varipade::TrainReport;

use crate::config::RunConfig;
use crate::CliError;

pub const LOSS_HEADER: [&str; 3] = ["step", "loss", "j_gap"];
pub const CURVES_HEADER: [&str; 4] = ["structure", "step", "loss", "j_gap"];
pub const TABLE_HEADER: [&str; 7] = [
    "structure",
    "n_params",
    "j_final",
    "j_exact",
    "relative_error",
    "seeds_ok",
    "status",
];

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn gap(loss: f64, j_exact: Option<f64>) -> String {
    j_exact.map(|j| num(loss - j)).unwrap_or_default()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_records(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_loss_csv(path: &Path, report: &TrainReport<f64>, j_exact: Option<f64>) -> Result<(), CliError> {
    let rows = report
        .loss_history
        .iter()
        .map(|&(step, loss)| vec![step.to_string(), num(loss), gap(loss, j_exact)]);
    write_records(path, &LOSS_HEADER, rows)
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub problem: &'a str,
    pub structure: String,
    pub n_params: usize,
    pub j_final: Option<f64>,
    pub j_exact: Option<f64>,
    pub relative_error: Option<f64>,
    pub status: String,
    pub steps_run: usize,
    pub m_a: f64,
    pub m_b: f64,
    pub wall_time_ms: f64,
    pub config: &'a RunConfig,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl<'a> Summary<'a> {
    pub fn new(problem: &'a str, report: &TrainReport<f64>, j_exact: Option<f64>, config: &'a RunConfig) -> Self {
        let j_final = finite(report.j_final);
        let relative_error = match (j_exact, j_final) {
            (Some(e), Some(j)) => varipade::relative_error(e, j).ok(),
            _ => None,
        };
        Self {
            problem,
            structure: report.structure.to_string(),
            n_params: report.structure.param_count(),
            j_final,
            j_exact,
            relative_error,
            status: report.status.to_string(),
            steps_run: report.steps_run,
            m_a: report.final_exponents.m_a(),
            m_b: report.final_exponents.m_b(),
            wall_time_ms: report.wall_time_ms,
            config,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_table_csv(path: &Path, table: &CaseTable<f64>) -> Result<(), CliError> {
    let rows = table.rows.iter().map(|row| {
        let ok = row.runs.iter().filter(|r| !r.status.is_failed()).count();
        vec![
            row.structure.to_string(),
            row.n_params.to_string(),
            finite(row.j_final).map(num).unwrap_or_default(),
            num(table.j_exact),
            finite(row.relative_error).map(num).unwrap_or_default(),
            format!("{ok}/{}", row.runs.len()),
            row.status().to_string(),
        ]
    });
    write_records(path, &TABLE_HEADER, rows)
}

pub fn write_curves_csv(path: &Path, table: &CaseTable<f64>) -> Result<(), CliError> {
    let rows = table.rows.iter().flat_map(|row| {
        let name = row.structure.to_string();
        row.curve()
            .loss_history
            .iter()
            .map(move |&(step, loss)| vec![name.clone(), step.to_string(), num(loss), gap(loss, Some(table.j_exact))])
    });
    write_records(path, &CURVES_HEADER, rows)
}
