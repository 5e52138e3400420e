//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant. Every constant used in this crate is finite,
    /// so the conversion cannot fail for `f32`/`f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    /// Complementary error function.
    fn erfc(self) -> Self;
}

impl Real for f32 {
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

impl Real for f64 {
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}
