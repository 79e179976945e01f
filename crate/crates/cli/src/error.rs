use std::io;
use std::path::Path;

use thiserror::Error;

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when a verification check fails.
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Exit status for bad arguments, bad input files and I/O failures.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{path}, line {line}: {msg}")]
    Malformed { path: String, line: u64, msg: String },

    #[error(transparent)]
    Core(#[from] glassy_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
