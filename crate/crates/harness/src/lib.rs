//! Monte-Carlo experiments and single-shot inference on top of `adasi-core`.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod problem;
pub mod report;

pub use config::{App, ExperimentConfig, Method};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, Decision, ExperimentResult, Summary, TrialRecord};
