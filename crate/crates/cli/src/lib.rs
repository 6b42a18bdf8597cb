//! Library side of the `pspec` binary: configuration, file formats and
//! subcommand drivers.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod csv;
pub mod svg;

use pspec_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument { .. } | Error::DimensionMismatch { .. } | Error::UnsupportedDepth { .. } | Error::BoxTooSmall => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub use commands::run;
pub use config::Cli;
