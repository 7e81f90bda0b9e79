//! Scalar abstraction for the statistical kernels: `f32` or `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by the statistical computations.
pub trait Real: Float + FromPrimitive + AddAssign + Sum + Debug + Display + LowerExp {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into the working scalar.
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("finite f64 constant must convert")
}

/// Converts a count into the working scalar.
pub fn from_count<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("count must convert to scalar")
}
