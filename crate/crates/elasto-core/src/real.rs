//! Scalar abstraction for RF samples and estimation arithmetic.
//!
//! Everything in this crate is generic over [`Real`], a floating-point
//! scalar implemented for `f32` and `f64`. RF files store `f32` samples;
//! estimation typically runs in `f64`. Constants and RNG draws are produced
//! in `f64` and narrowed through [`Real::of`], so the f32 and f64 pipelines
//! consume identical random streams.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable for RF samples, correlation values, and
/// strain estimates.
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar (lossy for `f32`).
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Widens this scalar to `f64` (exact for both `f32` and `f64`).
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("Real widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
