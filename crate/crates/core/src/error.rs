use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("d must be a squarefree integer >= 2, got {0}")]
    NotSquarefree(u64),
    #[error("division by zero field element")]
    DivisionByZero,
    #[error("theta must be irrational (b != 0), got a rational element")]
    RationalTheta,
    #[error("cannot reduce the zero lattice point")]
    ZeroPoint,
    #[error("flux must be a reduced rational p/q with 0 <= p < q, got {0}/{1}")]
    BadFlux(i64, i64),
    #[error("series exponent must satisfy {requirement}, got s = {got}")]
    BadExponent { requirement: &'static str, got: f64 },
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("cocycle mismatch between operands")]
    CocycleMismatch,
    #[error("unit cocycle requires N(omega) = 1")]
    NotUnitCocycle,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
