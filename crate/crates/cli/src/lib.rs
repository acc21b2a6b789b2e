//! Experiment harness for `bregman-cs`: configuration, file formats and
//! the `generate`, `solve`, `experiment`, `online` and `verify` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::ExperimentConfig;
pub use error::CliError;
