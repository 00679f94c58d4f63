//! Dataset ingestion, experiment configuration, grid runs and run
//! comparison for the recommenders in `rwe_core`.

pub mod cli;
pub mod compare;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod positions;
pub mod seeds;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result, Stage};
pub use experiment::{run_experiment, ExperimentOutcome};
