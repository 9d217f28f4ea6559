use thiserror::Error;

use crate::cover::BooleanHypothesis;
use crate::regression::SolveResult;

/// Errors produced by the learner and its verification machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The solver ran out of iterations before its optimality gap bound fell
    /// below the requested tolerance. Carries the best incumbent.
    #[error("solver did not certify tolerance {tolerance:e} within {iterations} iterations (gap bound {gap:e})")]
    NotCertified { tolerance: f64, gap: f64, iterations: usize, best: Box<SolveResult> },

    /// An enumeration would exceed its configured budget.
    #[error("resource budget exceeded: {what} needs {needed}, limit {limit}")]
    Resource { what: &'static str, needed: u128, limit: u128 },

    /// Tuple search stopped at its budget. Carries the best hypothesis found
    /// among the tuples that were examined.
    #[error("tuple budget exceeded after {examined} tuples (best error {error})")]
    TupleBudget { examined: u64, error: f64, best: Box<BooleanHypothesis> },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
