use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A natural-parameter update produced a nonnegative `lambda2`, i.e. the
    /// iterate left the Gaussian family.
    #[error("invalid precision at step {step}, coordinate {coord}: lambda2 = {lambda2}")]
    InvalidPrecision {
        step: usize,
        coord: usize,
        lambda2: f64,
    },

    #[error("{0} has no closed-form expected loss; use the Monte-Carlo estimator")]
    NoClosedForm(String),

    #[error("no certified Lipschitz constant for {0}")]
    UnsupportedConstant(String),

    #[error("empty data")]
    EmptyData,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
