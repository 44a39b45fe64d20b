use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("boundary classification failed: {0}")]
    Classification(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} against scale {scale:e}")]
    NotSymmetric { asymmetry: f64, scale: f64 },
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("conjugate gradient breakdown at iteration {iteration}")]
    Breakdown { iteration: usize },
    #[error("{method} did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("solve residual {residual:e} exceeds tolerance {tol:e}")]
    Inaccurate { residual: f64, tol: f64 },
    #[error("undefined: {0}")]
    Undefined(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::ConfigLine { .. }
            | Error::Parse(_)
            | Error::Mesh(_)
            | Error::Classification(_)
            | Error::Resolution(_) => ErrorKind::Config,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Numeric,
        }
    }
}
