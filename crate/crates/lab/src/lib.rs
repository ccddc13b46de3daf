#![doc = include_str!("../README.md")]

pub mod cli;
pub mod config;
pub mod diagnose;
pub mod error;
pub mod export;
pub mod record;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use run::{load, run, RunManifest, RunStatus};
