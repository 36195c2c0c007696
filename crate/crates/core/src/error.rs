use thiserror::Error;

use crate::rational::Rational;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{value} is outside the domain {domain}")]
    Domain { value: String, domain: &'static str },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    /// Evaluation of F failed at a lattice point the recursion needed.
    #[error("evaluation of F failed at ({}, {}): {reason}", at.0, at.1)]
    LatticeEval {
        at: Box<(Rational, Rational)>,
        reason: String,
    },

    /// Point-level failure inside a batch run.
    #[error("at t = {t}: {source}")]
    AtPoint { t: String, source: Box<Error> },

    #[error(
        "no convergence within {depth} approximants: best value {best}, achieved bound {bound:e}"
    )]
    Convergence { depth: usize, best: f64, bound: f64 },

    #[error("quadrature subdivision limit reached: estimate {estimate}, error bound {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("point {0} is not covered by the sample table")]
    Coverage(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
