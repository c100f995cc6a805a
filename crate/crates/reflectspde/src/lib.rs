//! Experiment runner for the penalized reflected-SPDE harness: TOML
//! configuration, a rayon executor, CSV artifacts and the run manifest.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod exec;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use exec::RayonExecutor;
pub use output::Manifest;
pub use run::{run, RunError, RunOptions, RunOutcome, Subcommand};
