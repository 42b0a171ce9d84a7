use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("absolute continuity violated: {0}")]
    AbsoluteContinuity(String),
    #[error("no convergence after {iterations} iterations (gap {gap:e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        best: Box<crate::thresholds::CapacityResult>,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("infeasible problem size: {0}")]
    Feasibility(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(format!($($arg)*)) };
}
macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use {domain_err, param_err};
