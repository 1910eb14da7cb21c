//! Scalar abstraction shared by the geometric and statistical modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the geometry, estimation and metric code.
///
/// Implemented for `f32` and `f64`. Everything that touches pixels or images
/// directly works in `f32`/`f64` concretely; the math layered on top of it is
/// written against this trait.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn degrees(self) -> Self {
        self * Self::lit(180.0) / Self::pi()
    }
}

impl Real for f32 {}
impl Real for f64 {}
