use thiserror::Error;

use crate::scalar::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate r-matrix; kernel vector {kernel:?}")]
    Degenerate { kernel: Vec<Rational> },
    #[error("polynomial degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
