use thiserror::Error;

/// Errors raised by the moving-well library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The well width is zero or negative at the queried time. `horizon` is
    /// the time at which the width vanishes.
    #[error("time {t} is outside the validity window: the well width vanishes at t* = {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("adaptive quadrature exceeded its budget of {panels} panels (best estimate {estimate}, error bound {error_bound:e})")]
    QuadratureBudgetExceeded {
        panels: usize,
        estimate: num_complex::Complex64,
        error_bound: f64,
    },

    #[error("invalid probe at (x = {x}, t = {t}): {reason}")]
    InvalidProbe { x: f64, t: f64, reason: String },

    #[error("audit failed: {0}")]
    AuditFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
