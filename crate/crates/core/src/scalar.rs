//! Scalar bound shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point type the kernels are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into this type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// A tolerance that never drops below a few hundred ulps of this type.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(x).max(floor)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn real<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}
