//! Experiment harness: configuration, data generation, runs, reports and
//! demos behind the `sketchgc` binary.

pub mod config;
pub mod data;
pub mod demos;
pub mod error;
pub mod experiment;
pub mod output;
pub mod report;

pub use config::{DataModel, ExperimentConfig, Method};
pub use error::{CliError, Result};
