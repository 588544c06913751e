//! Dataset and configuration files, result serialization, and the
//! subcommand drivers behind the `sievefit` binary.

mod commands;
mod config;
mod dataset;

pub use commands::{
    cmd_aic, cmd_fit, cmd_simulate, format_table, predict, read_fit_file, AicReport,
    CoefficientReport, FitFile, FitReport, SavedBasis, SavedModel, TraceSummary,
};
pub use config::{AicGrid, Links, RunConfig, SimulationSection, DEFAULT_SEED};
pub use dataset::{parse_dataset, read_dataset, write_dataset, Dataset};

use crate::error::Error;

/// Process exit status for an error: 2 for bad input or configuration,
/// 3 for non-convergence, 4 for a failed Monte Carlo harness.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::Harness(_) => 4,
        _ => 2,
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
