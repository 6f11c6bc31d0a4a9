//! Scalar abstraction shared by the linear-algebra and network code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-for-f64 conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// `max(floor, k * epsilon)`, used to keep double-precision tolerances
    /// meaningful when the scalar is `f32`.
    fn tol(floor: f64, k: f64) -> Self {
        let eps = Self::epsilon().as_f64();
        Self::lit(floor.max(k * eps))
    }
}

impl Real for f32 {}
impl Real for f64 {}
