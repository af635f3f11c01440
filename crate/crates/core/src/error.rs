use thiserror::Error;

/// Crate-wide error type. The CLI maps the variants onto exit codes
/// (1 validation, 2 numerical, 3 I/O).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 1,
            Error::Numerical(_) => 2,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
