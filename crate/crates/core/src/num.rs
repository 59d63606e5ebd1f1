//! Scalar abstraction for the continuous parts of the pipeline.
//!
//! Ray geometry, transfer-function colors, and compositing are generic over
//! [`Real`]; intensities and distance maps stay integral.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used for geometry and compositing: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and user input.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Real")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
