//! Experiment orchestration for compactlab: configuration schema, built-in
//! scenarios and the diagnostic runner behind the `compactlab` binary.

pub mod config;
pub mod runner;
pub mod scenarios;

pub use config::{parse, validate, ExperimentConfig};
pub use runner::{evaluate_config, run, write_report, Report, RunError};
