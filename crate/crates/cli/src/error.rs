use std::path::PathBuf;

use thiserror::Error;

/// Anything that stops a run before checks execute; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] finsler_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
