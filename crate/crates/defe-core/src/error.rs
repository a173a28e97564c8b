//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or argument.
    #[error("config: {0}")]
    Config(String),

    /// Input columns do not match the expected schema.
    #[error("schema: {0}")]
    Schema(String),

    /// Malformed cell or record in an input file.
    #[error("parse: line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Data violates an operation precondition (empty class, empty set, ...).
    #[error("data: {0}")]
    Data(String),

    /// Numeric failure: divergence, rank deficiency, shape mismatch.
    #[error("numeric: {0}")]
    Numeric(String),

    /// Model bundle is missing files or has a malformed manifest.
    #[error("bundle: {0}")]
    Bundle(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Schema(_) | Error::Parse { .. } | Error::Data(_) => 3,
            Error::Numeric(_) => 4,
            Error::Bundle(_) | Error::Io(_) => 3,
        }
    }
}
