//! Scalar abstraction shared by the geometry and policy code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Values within this distance of an integer are treated as that integer
    /// before rounding to device pixels.
    const SNAP_TOLERANCE: f64;

    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must be representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }

    /// Floor, ignoring sub-tolerance rounding noise just below an integer.
    fn floor_snapped(self) -> Self {
        let r = self.round();
        if (self - r).abs() <= Self::lit(Self::SNAP_TOLERANCE) * Self::one().max(self.abs()) {
            r
        } else {
            self.floor()
        }
    }

    /// Ceil, ignoring sub-tolerance rounding noise just above an integer.
    fn ceil_snapped(self) -> Self {
        let r = self.round();
        if (self - r).abs() <= Self::lit(Self::SNAP_TOLERANCE) * Self::one().max(self.abs()) {
            r
        } else {
            self.ceil()
        }
    }
}

impl Scalar for f32 {
    const SNAP_TOLERANCE: f64 = 1e-5;
}

impl Scalar for f64 {
    const SNAP_TOLERANCE: f64 = 1e-9;
}
