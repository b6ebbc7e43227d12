//! Command-line front end and HTTP service for the yard planner.

pub mod args;
pub mod commands;
pub mod service;

pub use args::{Cli, Command, ReportFormat, ResultFormat};
pub use commands::{load_config, load_dataset, run, CliError};
