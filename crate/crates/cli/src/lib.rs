//! Reproducible experiment runner for the `tbri` command: configuration,
//! the ensemble pipeline, interaction sweeps, schematic plot data and the
//! output manifest.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figure;
pub mod output;
pub mod sweep;

pub use config::{ExperimentConfig, Format, Overrides};
pub use error::{CliError, Result};
pub use experiment::{Regime, RunSummary};
