use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented precondition.
    Config(String),
    /// The integrator produced a non-finite state or left the excursion guard.
    Divergence { step: usize, reason: String },
    /// A divergence was requested for a drift without a differentiable
    /// representation and no finite-difference step was supplied.
    DivergenceUnavailable,
    /// The operation needs a smooth (mollified or closed-form) drift.
    SmoothnessRequired(String),
    /// A point fell outside the grid box during interpolation.
    OutOfBox { point: [f64; crate::linalg::MAX_DIM], dim: usize },
    /// An error raised while processing one Monte Carlo path.
    OnPath { path_index: usize, source: Box<Error> },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Tags the error with the Monte Carlo path it came from.
    pub fn on_path(self, path_index: usize) -> Self {
        match self {
            Error::OnPath { .. } => self,
            other => Error::OnPath { path_index, source: Box::new(other) },
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Divergence { step, reason } => {
                write!(f, "integrator diverged at step {step}: {reason}")
            }
            Error::DivergenceUnavailable => write!(
                f,
                "divergence unavailable: drift has no closed form and no finite-difference step was given"
            ),
            Error::SmoothnessRequired(what) => write!(f, "smoothness required: {what}"),
            Error::OutOfBox { point, dim } => {
                write!(f, "point {:?} lies outside the grid box", &point[..*dim])
            }
            Error::OnPath { path_index, source } => write!(f, "path {path_index}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
