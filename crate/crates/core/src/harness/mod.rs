//! Seeded experiment grids over (m, n, epsilon, matcher), threshold
//! estimation, and report output.

mod config;
mod report;
mod sweep;
mod threshold;

use thiserror::Error;

use crate::process::ModelError;

pub use config::{SweepConfig, SweepGrid};
pub use report::{emit_report, write_gnuplot, ReportFormat, TOOL_NAME, TOOL_VERSION};
pub use sweep::{run_sweep, summarize, CellInfo, CellSummary, SweepRow, SweepTable, CSV_HEADER};
pub use threshold::{estimate_threshold, estimate_all, ThresholdEstimate, ThresholdStatus, MAX_WIGGLE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("threshold estimation needs at least 3 distinct R values, found {found}")]
    InsufficientGrid { found: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}
