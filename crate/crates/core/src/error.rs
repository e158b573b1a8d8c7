use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, key `{key}`: {message}")]
    Parse { line: usize, key: String, message: String },

    #[error("validation error in `{record}`: {message}")]
    Validation { record: String, message: String },

    /// Quadrature or iteration stopped short of the requested tolerance.
    #[error("numeric error: {message} (achieved relative tolerance {achieved:e}, requested {requested:e})")]
    Numeric {
        message: String,
        achieved: f64,
        requested: f64,
    },

    #[error("no steady state: total damping Γ + γ_m = {0:e} must be positive")]
    NoSteadyState(f64),

    #[error("linewidth fit failed: {0}")]
    Fit(String),

    #[error("curve alignment error: {0}")]
    Alignment(String),

    #[error("bisection does not bracket: {0}")]
    Bisection(String),

    #[error("step size underflow at t = {t:e} s (h = {h:e} s); the system looks stiff, use the linear steady-state solve instead")]
    Stiffness { t: f64, h: f64 },

    #[error("simulation config error: {0}")]
    Config(String),

    #[error("series too short: {len} samples, need at least {required}")]
    Length { len: usize, required: usize },

    #[error("regime precondition violated: {0}")]
    Regime(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Rejects non-finite or non-positive values with a message naming the quantity.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{name} must be finite and >= 0, got {value}")))
    }
}
