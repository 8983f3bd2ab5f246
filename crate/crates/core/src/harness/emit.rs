//! Report output as JSON or as a pair of CSV tables.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::audit::ExperimentReport;
use crate::error::{Error, Result};

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    /// Audit rows at the given path, round losses next to it as `<stem>.rounds.csv`.
    Csv,
}

#[derive(Serialize)]
struct AuditRow<'a> {
    replicate: usize,
    rate: &'a str,
    comparator_id: &'a str,
    regret: f64,
    rate_value: f64,
    slack: f64,
}

#[derive(Serialize)]
struct RoundRow {
    replicate: usize,
    round: usize,
    loss: f64,
}

const AUDIT_HEADER: [&str; 6] = [
    "replicate",
    "rate",
    "comparator_id",
    "regret",
    "rate_value",
    "slack",
];
const ROUND_HEADER: [&str; 3] = ["replicate", "round", "loss"];

/// Path of the round-loss table that accompanies a CSV audit table.
pub fn rounds_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.rounds.csv"))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("writing {}: {other:?}", path.display())),
    }
}

fn write_table<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = T>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Canonical JSON text of a report.
pub fn report_json(report: &ExperimentReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Writes the report in the requested format.
pub fn emit_results(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<()> {
    match format {
        OutputFormat::Json => {
            std::fs::write(path, report_json(report)?).map_err(|e| Error::io(path, e))
        }
        OutputFormat::Csv => {
            let audit_rows = report.records.iter().flat_map(|rec| {
                rec.rates.iter().flat_map(move |ra| {
                    ra.rows.iter().map(move |row| AuditRow {
                        replicate: rec.replicate,
                        rate: &ra.rate,
                        comparator_id: &row.comparator_id,
                        regret: row.regret,
                        rate_value: row.rate,
                        slack: row.slack,
                    })
                })
            });
            write_table(path, &AUDIT_HEADER, audit_rows)?;
            let round_rows = report.records.iter().flat_map(|rec| {
                rec.rounds.iter().map(move |r| RoundRow {
                    replicate: rec.replicate,
                    round: r.round,
                    loss: r.loss,
                })
            });
            write_table(&rounds_path(path), &ROUND_HEADER, round_rows)
        }
    }
}

/// Reads a JSON report back.
pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
