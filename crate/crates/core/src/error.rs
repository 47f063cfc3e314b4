use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trap frequency is non-positive ({omega}) at t = {t}")]
    NonPositiveFrequency { t: f64, omega: f64 },

    #[error("packet width sigma became non-positive at t = {t}")]
    NonPositiveSigma { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("time {t} outside trajectory range [{t_start}, {t_end}]")]
    TimeOutOfRange { t: f64, t_start: f64, t_end: f64 },

    #[error("no stationary width in bracket ({lo:e}, {hi:e})")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("field is identically zero")]
    DegenerateField,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature not converged: estimate {estimate:e} above threshold {threshold:e}")]
    QuadratureDivergence { estimate: f64, threshold: f64 },

    #[error("boundary mass {ratio:e} (relative to peak) exceeds {limit:e} at t = {t}")]
    BoundaryMass { t: f64, ratio: f64, limit: f64 },

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidParameter { .. } | Error::Format(_) | Error::GridMismatch(_))
    }
}
