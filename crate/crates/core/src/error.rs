use thiserror::Error;

use crate::field::NodalField;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// The request has no meaningful discrete answer (e.g. an infimum that is zero in the continuum).
    #[error("refused: {0}")]
    Refused(String),

    #[error("no convergence after {iterations} iterations: {msg}")]
    NoConvergence {
        iterations: usize,
        msg: String,
        best: Option<Box<(f64, NodalField)>>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
