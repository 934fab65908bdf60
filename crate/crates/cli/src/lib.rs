//! Experiment runner for `ietlab-core`: configs, reports, CSV tables and
//! SVG plots behind the `ietlab` binary.

pub mod cli;
pub mod config;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use run::{execute, Outcome, Report, RunError};
