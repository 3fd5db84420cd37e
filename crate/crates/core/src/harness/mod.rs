//! Trace analysis, acceptance metrics, plotting and the command
//! implementations behind the CLI.

pub mod analysis;
mod commands;
mod metrics;
pub mod plot;

pub use commands::{
    cmd_analyze, cmd_bus_bench, cmd_calibrate, cmd_plot, cmd_run, inferred_expectations, BusBenchConfig, CommandOptions,
    JigConfig, Outcome,
};
pub use metrics::{evaluate, Metric, MetricsReport, Verdict, DEFAULT_FIN_JOINTS};

use std::path::PathBuf;

use crate::busring::BusError;
use crate::calibration::CalibrationError;
use crate::plant::PlantError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("trace too short: {0}")]
    TooShort(String),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Bus(#[from] BusError),
}
