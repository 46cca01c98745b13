use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type used throughout the crate.
///
/// Implemented for `f32` and `f64`. All curve, solver and mechanism code is
/// written against this trait; the sampling layer draws `f64` uniforms and
/// converts them.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance for hull-contact detection at the given magnitude.
    #[inline]
    fn contact_tol(scale: Self) -> Self {
        let floor = Self::of(1e-9);
        let noise = Self::epsilon() * Self::of(64.0) * scale.abs().max(Self::one());
        floor.max(noise)
    }

    /// Absolute tolerance for solver equalities (budget balance, root finding).
    #[inline]
    fn solver_tol(scale: Self) -> Self {
        let floor = Self::of(1e-6);
        let noise = Self::epsilon() * Self::of(1024.0) * scale.abs().max(Self::one());
        floor.max(noise)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Total order helper for sorting finite scalars.
#[inline]
pub(crate) fn cmp<T: Real>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}
