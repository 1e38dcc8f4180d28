use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data.
    Input,
    /// Input was well-formed but a structural constraint could not be met.
    Constraint,
    /// A bookkeeping invariant broke during simulation.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{source_name}, line {line}: {message}")]
    MalformedRow {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("occupation hierarchy exhausted, cannot merge further: {}", .codes.join(", "))]
    HierarchyExhausted { codes: Vec<String> },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("internal consistency fault at timestep {timestep}: {message}")]
    InternalFault { timestep: usize, message: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::HierarchyExhausted { .. } | Error::Constraint(_) => ErrorKind::Constraint,
            Error::InternalFault { .. } => ErrorKind::Internal,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
