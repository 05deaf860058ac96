//! Command-line front end for `shockdetect-core`: JSON configuration, CSV
//! and JSON output, and path-parallel Monte Carlo.

pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;
pub mod selftest;

use std::process::ExitCode;

use shockdetect_core::Error as CoreError;

/// Failures of a CLI command, each with a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] CoreError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} self-test check(s) failed")]
    SelftestFailed(usize),
}

impl CliError {
    /// 2 configuration, 3 solver inconsistency, 4 search failure, 5 self-test.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Solver(e) => match e {
                CoreError::InvalidParameter { .. } | CoreError::Domain { .. } => 2,
                CoreError::SearchFailed(_) => 4,
                _ => 3,
            },
            Self::SelftestFailed(_) => 5,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
