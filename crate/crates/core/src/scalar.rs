//! Scalar abstractions.
//!
//! Everything numeric in this crate is generic over [`Real`] (`f32`, `f64`)
//! or over [`Scalar`], which additionally covers `Complex<f32>` and
//! `Complex<f64>` for Hermitian one-body Hamiltonians and real-time amplitudes.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, Mul, Neg, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type: `f32` or `f64`.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the underlying type.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field element used in amplitude arithmetic: a [`Real`] or a complex number
/// over a [`Real`].
pub trait Scalar:
    LinalgScalar
    + Neg<Output = Self>
    + Mul<<Self as Scalar>::Real, Output = Self>
    + AddAssign
    + SubAssign
    + Sum
    + Debug
    + Default
    + Send
    + Sync
{
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;
    /// Builds a value from real and imaginary parts; `None` when the
    /// imaginary part is nonzero and `Self` is real.
    fn from_parts(re: Self::Real, im: Self::Real) -> Option<Self>;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn conj(self) -> Self;
    fn modulus(self) -> Self::Real;
    fn modulus_sqr(self) -> Self::Real;
    fn is_finite(self) -> bool;
    const IS_COMPLEX: bool;
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn from_parts(re: $t, im: $t) -> Option<Self> {
                (im == 0.0).then_some(re)
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }
            #[inline]
            fn modulus_sqr(self) -> $t {
                self * self
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            const IS_COMPLEX: bool = false;
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);

/// A [`Real`] that is its own [`Scalar`] and can scale ndarray arrays.
pub trait RealScalar: Real + Scalar<Real = Self> + ScalarOperand {}

impl<R: Real + Scalar<Real = R> + ScalarOperand> RealScalar for R {}

impl<R: Real> Scalar for Complex<R> {
    type Real = R;
    #[inline]
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    #[inline]
    fn from_parts(re: R, im: R) -> Option<Self> {
        Some(Complex::new(re, im))
    }
    #[inline]
    fn re(self) -> R {
        self.re
    }
    #[inline]
    fn im(self) -> R {
        self.im
    }
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn modulus(self) -> R {
        self.norm()
    }
    #[inline]
    fn modulus_sqr(self) -> R {
        self.norm_sqr()
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    const IS_COMPLEX: bool = true;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<S: Scalar>(x: S) -> S {
        S::from_parts(x.re(), x.im()).unwrap()
    }

    #[test]
    fn real_rejects_imaginary_part() {
        assert_eq!(f64::from_parts(1.0, 0.0), Some(1.0));
        assert_eq!(f64::from_parts(1.0, 2.0), None);
        assert_eq!(f32::from_parts(1.0, -1.0), None);
    }

    #[test]
    fn complex_parts() {
        let z = Complex::new(3.0_f64, -4.0);
        assert_eq!(z.modulus(), 5.0);
        assert_eq!(z.modulus_sqr(), 25.0);
        assert_eq!(Scalar::conj(z), Complex::new(3.0, 4.0));
        assert_eq!(roundtrip(z), z);
        assert!(!Complex::new(f64::NAN, 0.0).is_finite());
    }
}
