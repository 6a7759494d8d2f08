use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by instance parsing, parameter validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("set index {index} out of range for a system of {num_sets} sets")]
    IndexOutOfRange { index: usize, num_sets: usize },

    #[error("element {element} is not covered by any set")]
    Uncoverable { element: u32 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("rejection sampling gave up after {attempts} attempts: {reason}")]
    InfeasibleConditioning { attempts: u64, reason: String },

    #[error("formula degenerate at this scale: raw value {raw}")]
    DegenerateFormula { raw: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metadata: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

/// A malformed instance file. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected header \"SC v1\"")]
    BadMagic { line: usize },

    #[error("line {line}: malformed header, expected \"<n> <m>\" with n >= 1")]
    BadHeader { line: usize },

    #[error("line {line}: malformed set line: {reason}")]
    BadSetLine { line: usize, reason: String },

    #[error("line {line}: element {element} >= universe size {n}")]
    ElementOutOfRange { line: usize, element: u64, n: usize },

    #[error("line {line}: elements not strictly increasing at {element}")]
    Unsorted { line: usize, element: u32 },

    #[error("line {line}: duplicate element {element}")]
    Duplicate { line: usize, element: u32 },

    #[error("line {line}: expected {expected} sets, found {found}")]
    SetCount {
        line: usize,
        expected: usize,
        found: usize,
    },
}
