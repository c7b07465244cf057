use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::SweepConfig;
use super::sweep::{summarize, CellInfo, SweepRow, SweepTable, CSV_HEADER};
use super::threshold::ThresholdEstimate;
use super::HarnessError;

pub const TOOL_NAME: &str = "dbmatch";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a SweepConfig>,
    cells: &'a [CellInfo],
    rows: &'a [SweepRow],
    thresholds: &'a [ThresholdEstimate],
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn csv_bytes(table: &SweepTable) -> Result<Vec<u8>, csv::Error> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for row in &table.rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| e.into_error().into())
}

/// Writes the sweep table. CSV holds the rows only; JSON adds the config
/// echo, the resolved cells, threshold estimates and the tool version.
pub fn emit_report(
    table: &SweepTable,
    estimates: &[ThresholdEstimate],
    config: Option<&SweepConfig>,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let bytes = match format {
        ReportFormat::Csv => csv_bytes(table).map_err(|e| io_err(path, e))?,
        ReportFormat::Json => {
            let report = JsonReport {
                tool: TOOL_NAME,
                version: TOOL_VERSION,
                config,
                cells: &table.cells,
                rows: &table.rows,
                thresholds: estimates,
            };
            let mut text = serde_json::to_vec_pretty(&report).map_err(|e| io_err(path, e))?;
            text.push(b'\n');
            text
        }
    };
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Gnuplot data: one indexed block per (m, matcher, epsilon) with columns
/// R, mean success, mean ambiguity, trials, n.
pub fn write_gnuplot(table: &SweepTable, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let mut current = None;
    for s in summarize(table) {
        let key = (s.m, s.matcher, s.epsilon.map(f64::to_bits));
        if current != Some(key) {
            if current.is_some() {
                out.extend_from_slice(b"\n\n");
            }
            let eps = s.epsilon.map_or("-".to_string(), |e| e.to_string());
            writeln!(out, "# m={} matcher={} epsilon={}", s.m, s.matcher, eps).unwrap();
            writeln!(out, "# R mean_success mean_ambiguity trials n").unwrap();
            current = Some(key);
        }
        writeln!(out, "{} {} {} {} {}", s.r, s.mean_success, s.mean_ambiguity, s.trials, s.n).unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
