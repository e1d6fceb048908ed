//! Command-line orchestration for cane-sentinel: configuration, the
//! synthetic corpus generator and the subcommands.

use std::io;
use std::path::Path;

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod synth;

pub use commands::{run_cli, run_cli_with};
pub use config::RunConfig;

/// Exit status 2 for usage and I/O problems, 1 for everything the domain
/// rejects.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}
