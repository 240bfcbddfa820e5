//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is singular or below the determinant floor (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("principal logarithm undefined: eigenvalue {re:e}{im:+e}i lies on the closed negative real axis")]
    LogBranch { re: f64, im: f64 },

    #[error("BCH radius exceeded: norm {norm:e} > radius {radius:e}")]
    BchRadius { norm: f64, radius: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigenvalue solver failed for sample at t = {t}")]
    EigenFailure { t: f64 },

    #[error("solution blew up at t = {t} (non-finite state)")]
    BlowUp { t: f64 },

    #[error("operands belong to different algebras: {left} vs {right}")]
    TagMismatch { left: String, right: String },

    #[error("unsupported splitting: {0}")]
    UnsupportedSplitting(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
