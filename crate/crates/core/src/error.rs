use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::ComplexMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),

    #[error("matrix contains a non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is singular to tolerance (numerical rank {rank} of {n})")]
    Singular { rank: usize, n: usize },

    #[error("SVD did not converge on a {}x{} input", .input.rows(), .input.cols())]
    SvdNonConvergence { input: Box<ComplexMatrix> },

    #[error("matrix is not group invertible: rank(A) = {rank}, rank(A^2) = {rank_sq}{}", if *.marginal { " (marginal rank decision)" } else { "" })]
    NotGroupInvertible {
        rank: usize,
        rank_sq: usize,
        marginal: bool,
    },

    #[error("invertible core GF is ill-conditioned: cond = {condition:e} exceeds {bound:e}")]
    IllConditionedCore { condition: f64, bound: f64 },

    #[error("triangular block condition x^pi y w^pi = 0 violated (residual {residual:e})")]
    ConditionViolated { residual: f64 },

    #[error("{theorem}: lambda = {lambda} is not supported: {reason}")]
    UnsupportedLambda {
        theorem: String,
        lambda: Complex64,
        reason: String,
    },

    #[error("{theorem}: lambda = -1 is excluded")]
    LambdaIsMinusOne { theorem: String },

    #[error("{theorem}: hypothesis `{name}` violated (residual {residual:e} > {tol:e})")]
    HypothesisViolated {
        theorem: String,
        name: String,
        residual: f64,
        tol: f64,
    },

    #[error("{which} is not idempotent (residual {residual:e})")]
    NotIdempotent { which: String, residual: f64 },

    #[error("rank pattern rank(B) = rank(C) = rank(BC) = rank(CB) violated: {ranks:?}")]
    RankPatternViolated { ranks: [usize; 4] },

    #[error("generator mode {mode} does not support lambda = {lambda}")]
    UnsupportedMode { mode: String, lambda: Complex64 },

    #[error("unknown theorem tag `{0}`")]
    UnknownTheorem(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
