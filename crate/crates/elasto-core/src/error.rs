//! Error type shared by the simulation, correlation, and estimation modules.

use thiserror::Error;

/// Errors produced by phantom construction, correlation, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// A specification (phantom, transducer, deformation, estimator) failed
    /// validation before any computation ran.
    #[error("invalid specification: {reason}")]
    InvalidSpec { reason: String },

    /// A query point lies outside the phantom domain.
    #[error("point ({x_mm}, {y_mm}) mm lies outside the {width_mm} x {height_mm} mm phantom")]
    OutOfDomain {
        x_mm: f64,
        y_mm: f64,
        width_mm: f64,
        height_mm: f64,
    },

    /// An input segment or map region carries no usable signal
    /// (zero variance, empty, or non-finite).
    #[error("degenerate input: {reason}")]
    DegenerateInput { reason: String },

    /// Operation parameters are inconsistent with the data they are applied
    /// to (window longer than the frame, lag range too wide, ...).
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Two frames that must share geometry do not.
    #[error("frame shape mismatch: {reason}")]
    ShapeMismatch { reason: String },

    /// Estimation could not produce a result for a mandatory window.
    #[error("estimation failed: {reason}")]
    EstimationFailed { reason: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn spec(reason: impl Into<String>) -> Self {
        Error::InvalidSpec { reason: reason.into() }
    }

    pub(crate) fn degenerate(reason: impl Into<String>) -> Self {
        Error::DegenerateInput { reason: reason.into() }
    }

    pub(crate) fn config(reason: impl Into<String>) -> Self {
        Error::InvalidConfig { reason: reason.into() }
    }

    pub(crate) fn shape(reason: impl Into<String>) -> Self {
        Error::ShapeMismatch { reason: reason.into() }
    }
}
