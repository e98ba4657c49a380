use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical core.
///
/// Everything except [`Error::NonFinite`] is an input-validation failure.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar input violates its domain.
    InvalidParameter {
        field: &'static str,
        value: f64,
        requirement: &'static str,
    },
    /// A time argument lies outside `[0, T]`.
    TimeOutOfRange { t: f64, horizon: f64 },
    /// `β(t)` was requested at or past the horizon, where it diverges.
    HorizonSingularity { t: f64, horizon: f64 },
    /// A noise schedule has a gap, overlap, empty segment or negative variance.
    InvalidSchedule {
        segment: usize,
        reason: &'static str,
    },
    /// A schedule does not cover the horizon it is used with.
    HorizonMismatch { expected: f64, found: f64 },
    /// Fewer paths than needed to form a standard error.
    InsufficientPaths { n_paths: usize, required: usize },
    /// A simulated quantity became NaN or infinite.
    NonFinite {
        path: u64,
        step: usize,
        quantity: &'static str,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::InvalidParameter {
            field,
            value,
            requirement,
        }
    }

    /// True for input-validation failures, false for runtime aborts.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonFinite { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                field,
                value,
                requirement,
            } => write!(f, "invalid {field} = {value}: must be {requirement}"),
            Error::TimeOutOfRange { t, horizon } => {
                write!(f, "time {t} outside the trading horizon [0, {horizon}]")
            }
            Error::HorizonSingularity { t, horizon } => write!(
                f,
                "trading intensity diverges at the horizon: t = {t} >= T = {horizon}"
            ),
            Error::InvalidSchedule { segment, reason } => {
                write!(f, "invalid noise schedule at segment {segment}: {reason}")
            }
            Error::HorizonMismatch { expected, found } => {
                write!(f, "schedule ends at {found}, expected horizon {expected}")
            }
            Error::InsufficientPaths { n_paths, required } => write!(
                f,
                "{n_paths} path(s) cannot give a standard error; need at least {required}"
            ),
            Error::NonFinite {
                path,
                step,
                quantity,
            } => write!(f, "non-finite {quantity} on path {path} at step {step}"),
        }
    }
}

impl core::error::Error for Error {}

/// Checks `value > 0` and finite.
pub(crate) fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, value, "finite and > 0"))
    }
}

/// Checks `value >= 0` and finite.
pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, value, "finite and >= 0"))
    }
}
