//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that decides a sign (pivots, leading minors, LP feasibility)
//! is written against [`Scalar`], so the same code runs in binary floating
//! point and in exact rational arithmetic. Floating-point types answer
//! [`Scalar::tol`] with the requested threshold; exact types answer zero.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

pub trait Scalar: Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Threshold below which a magnitude is treated as zero.
    fn tol(reference: f64) -> Self;

    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_i64(x: i64) -> Self {
        Self::from_f64(x as f64)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tol(reference: f64) -> Self {
        reference
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tol(reference: f64) -> Self {
        // below ~1e-6 single precision cannot distinguish anything
        reference.max(1e-6) as f32
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tol(_reference: f64) -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    /// Exact conversion of the binary value; panics on NaN or infinity.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value required for exact conversion")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
}

/// `n / d` in any scalar type, exact when the type is.
pub fn ratio<T: Scalar>(n: i64, d: i64) -> T {
    T::from_i64(n) / T::from_i64(d)
}

/// Convenience for building exact rationals in tests and fixtures.
pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_types_have_zero_tolerance() {
        assert_eq!(<BigRational as Scalar>::tol(1e-8), rational(0, 1));
        assert_eq!(<f64 as Scalar>::tol(1e-8), 1e-8);
        assert!(<f32 as Scalar>::tol(1e-12) >= 1e-6);
    }

    #[test]
    fn exact_float_conversion_is_lossless() {
        let r = <BigRational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert_ne!(r, rational(1, 10));
        assert_eq!(ratio::<BigRational>(2, 3), rational(2, 3));
    }
}
