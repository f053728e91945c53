//! Command-line front end for the `posmap` library.

pub mod config;
pub mod render;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] posmap::Error),
}

impl CliError {
    /// Process exit status; mathematical failures use 1, everything here 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub use config::{Cli, Command, CommandKind, Flags, OutputFormat, RunConfig};
pub use run::{run, Outcome};
