use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("degenerate objective: quadratic coefficient A = {a} is not positive")]
    DegenerateObjective { a: f64 },

    #[error("numeric range error: {0}")]
    NumericRange(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("constraint violation: length[{index}] = {value} is negative")]
    ConstraintViolation { index: usize, value: f64 },

    #[error("invalid lengths: {0}")]
    InvalidLengths(String),

    #[error("invalid symbol index {0}")]
    InvalidSymbol(usize),

    #[error("corrupt stream: undecodable bits at offset {0}")]
    CorruptStream(usize),

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("sweep failure: {0}")]
    SweepFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
