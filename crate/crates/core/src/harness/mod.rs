//! Scenario files, presets, the CSV/JSON artifacts and the commands behind
//! the `ovfl` binary.

mod run;
mod scenario;
mod sweep;
mod table;

use std::path::Path;

use serde_json::json;
use thiserror::Error;

pub use run::{
    analyze, analyze_table, simulate, AnalysisOutput, EnergyReport, PairBarrier, RunArtifact, RunReport,
};
pub use scenario::{OutputKind, Scenario, PRESETS};
pub use sweep::{run_sweep, worker_count, CellSummary, SampledCell, SweepRequest, SweepSummary};
pub use table::{columns, SampleTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { message: String, line: usize, column: usize },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("{failed} monitor(s) failed")]
    MonitorFailure { failed: usize },
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn validation(e: impl std::fmt::Display) -> Self {
        Self::Validation(e.to_string())
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Schema(_) => 2,
            Self::Validation(_) => 3,
            Self::Integration(_) => 4,
            Self::MonitorFailure { .. } => 5,
            Self::Io { .. } => 1,
        }
    }

    /// Machine-readable form printed on stderr by the binary.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            Self::Parse { .. } => "parse",
            Self::Schema(_) => "schema",
            Self::Validation(_) => "validation",
            Self::Integration(_) => "integration",
            Self::MonitorFailure { .. } => "monitor_failure",
            Self::Io { .. } => "io",
        };
        let mut v = json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() });
        if let Self::Parse { line, column, .. } = self {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        v
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn to_json_string<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}
