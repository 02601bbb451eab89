//! Experiment runner: configuration, metrics output and the active-learning sweep.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{DatasetKind, Overrides, RunConfig};
pub use error::CliError;
pub use output::{RunManifest, METRICS_HEADER};
pub use runner::{rounds_to_target, run, sweep_al, SweepRow};
