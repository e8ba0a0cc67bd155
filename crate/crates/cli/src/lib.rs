//! Config-driven experiment runner for `rclt-core`.

pub mod config;
pub mod error;
pub mod runner;

pub use config::{load, validate, Command, Diagnostic, ExperimentConfig, Overrides, Severity};
pub use error::{CliError, Result};
pub use runner::{run, run_selected, RunManifest};
