//! Configuration-driven experiment runner for `sadqas`.
//!
//! The `sadqas` binary wraps the four commands in [`run`] and [`report`].
//! Every command reads one TOML file (see [`config`]) and writes plain CSV
//! and JSON into the run's output directory.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;
pub mod summary;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
