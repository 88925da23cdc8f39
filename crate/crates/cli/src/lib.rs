//! Configuration, caching and subcommands behind the `cocolab` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;

pub use config::ExperimentConfig;
pub use error::CliError;
