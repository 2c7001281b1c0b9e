//! HTTP gateway and operator CLI for the railshop engine.

pub mod baseline;
pub mod commands;
pub mod config;
pub mod gateway;
pub mod scenario;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {0}", .0.code())]
    Domain(#[from] railshop_core::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Failed(_) => 1,
        }
    }
}
