use std::io;
use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Bad arguments, unreadable or malformed files.
    pub const USAGE: u8 = 1;
    /// A ciphertext failed its basis-state check or was altered.
    pub const INTEGRITY: u8 = 2;
    /// A size cap was hit.
    pub const RESOURCE: u8 = 3;
    /// An analysis ran to completion and its criterion did not hold.
    pub const ANALYSIS_FAILED: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qblock_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cannot serialize output: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("integrity check failed: {0}")]
    Tampered(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use qblock_core::Error as E;
        match self {
            CliError::Core(E::Integrity { .. }) | CliError::Tampered(_) => exit::INTEGRITY,
            CliError::Core(E::Resource(_)) => exit::RESOURCE,
            _ => exit::USAGE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
