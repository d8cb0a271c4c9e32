use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidInput,
    Numerical,
    Timeout,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} = {value:e} is outside the feasible interval [{min:e}, {max:e}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error(
        "row {row} cannot be normalized: free cell would need {required:e} S, \
         feasible interval is [{min:e}, {max:e}] S"
    )]
    InfeasibleNormalization {
        row: usize,
        required: f64,
        min: f64,
        max: f64,
    },

    #[error("singular or indefinite system: pivot {pivot} ({label}) = {value:e}")]
    Singular {
        pivot: usize,
        label: String,
        value: f64,
    },

    #[error("transient step rejected at t = {time:e} s: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("no sigmoid fit possible: {0}")]
    NoFit(String),

    #[error("outputs did not settle within {max_time:e} s (worst relative deviation {residual:e})")]
    SettleTimeout { max_time: f64, residual: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::OutOfRange { .. }
            | Error::InfeasibleNormalization { .. }
            | Error::NoFit(_) => ErrorKind::InvalidInput,
            Error::Singular { .. } | Error::StepRejected { .. } => ErrorKind::Numerical,
            Error::SettleTimeout { .. } => ErrorKind::Timeout,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn ensure_finite(what: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(what: &str, value: f64) -> Result<()> {
    ensure_finite(what, value)?;
    if value < 0.0 {
        return Err(Error::invalid(format!("{what} must be >= 0, got {value:e}")));
    }
    Ok(())
}

pub(crate) fn ensure_positive(what: &str, value: f64) -> Result<()> {
    ensure_finite(what, value)?;
    if value <= 0.0 {
        return Err(Error::invalid(format!("{what} must be > 0, got {value:e}")));
    }
    Ok(())
}
