//! Command-line driver and on-disk run store for the hybrid policy
//! gradient pipeline: `train` runs either agent and persists its
//! artifacts under `runs/<exp>/`, `eval` scores saved weights over the
//! observation-noise sweep.

pub mod args;
pub mod commands;
pub mod store;
pub mod weights;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation; exit status 1.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong while running; exit status 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn runtime(context: &str, err: impl core::fmt::Display) -> Self {
        CliError::Runtime(format!("{context}: {err}"))
    }
}

impl From<qpg_core::Error> for CliError {
    fn from(err: qpg_core::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
