//! The `riskml` pipeline: prepare, train, tune, evaluate and synth commands
//! over artifacts staged in an output directory.

pub mod app;
pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod synth;

pub use app::run;
pub use error::{CliError, CliResult};
