//! Experiment harness for clustered associative memories with noisy neurons.
//!
//! The heavy lifting lives in [`noisy_recall_core`]; this crate adds the model
//! file format, TOML configuration, run manifests and the experiment runner
//! behind the `noisy-recall` binary.

pub mod config;
pub mod experiments;
pub mod modelio;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, RunError, RunSummary, SweepRow};
pub use noisy_recall_core as core;
