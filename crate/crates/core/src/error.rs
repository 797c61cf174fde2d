use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad index, empty input...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// A configuration value that is well-formed but outside its valid range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A runtime invariant of the simulation did not hold. Names the invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code for the CLI: 2 for configuration problems, 1 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidConfig(_) => 2,
            _ => 1,
        }
    }
}
