use alloc::string::String;
use core::fmt;

/// Failures raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its admissible range (n-gram order 0, zero bins, ...).
    Parameter(String),
    /// A model could not be fitted from the supplied data.
    Fit(String),
    /// Every shrinkage level in the schedule failed to produce a positive definite matrix.
    Singular { last_epsilon: f64 },
    /// Vector or index does not fit the model/corpus dimensions.
    Bounds { expected: usize, found: usize },
    /// Non-finite value met where a finite one is required.
    Numeric(String),
    /// More examples requested than the corpus holds.
    Capacity { available: usize, requested: usize },
    /// A statistic is undefined for the input (too few values or zero variance).
    Undefined(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Fit(msg) => write!(f, "fit error: {msg}"),
            Error::Singular { last_epsilon } => write!(
                f,
                "covariance is singular: factorization failed up to epsilon = {last_epsilon:e}"
            ),
            Error::Bounds { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Capacity {
                available,
                requested,
            } => write!(
                f,
                "insufficient examples: n = {available}, requested {requested}"
            ),
            Error::Undefined(msg) => write!(f, "undefined statistic: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
