//! Scalar abstractions.
//!
//! Geometry (trajectories, continuation, quadrature) is written against
//! [`Real`], which every IEEE float satisfies.  The algebraic layer of
//! non-abelianization (2×2 transports, wall factors, hexagon products) only
//! needs ring operations plus division, captured by [`Field`]; it is
//! implemented both for complex floats and for exact complex rationals so the
//! algebraic identities can be checked without rounding.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point scalar used by all geometric computations.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Build a constant of this type from an `f64` literal.
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Lossy conversion to `f64`, for reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Convert a `usize` count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`].
pub type C<T> = Complex<T>;

/// Convenience constructor.
#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap_2pi<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let r = a % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// Reduce an angle to `(-π, π]`.
#[inline]
pub fn wrap_pi<T: Real>(a: T) -> T {
    let r = wrap_2pi(a);
    if r > T::PI() {
        r - T::TAU()
    } else {
        r
    }
}

/// Of the two square roots `±r`, the one closest to `reference`.
#[inline]
pub fn closest_root<T: Real>(r: C<T>, reference: C<T>) -> C<T> {
    if (r - reference).norm_sqr() <= (r + reference).norm_sqr() {
        r
    } else {
        -r
    }
}

/// Coefficient field for 2×2 transports and local-system values.
pub trait Field: Clone + PartialEq + Debug + Num + std::ops::Neg<Output = Self> + Send + Sync {
    /// Absolute value as `f64`, used for residual reporting.
    fn modulus(&self) -> f64;
}

impl<T: Real> Field for Complex<T> {
    fn modulus(&self) -> f64 {
        self.norm().f64()
    }
}

/// Exact complex rational.
pub type ExactComplex = Complex<BigRational>;

impl Field for ExactComplex {
    fn modulus(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::NAN);
        let im = self.im.to_f64().unwrap_or(f64::NAN);
        re.hypot(im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert!((wrap_2pi(-0.5f64) - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
        assert!((wrap_pi(3.5f64) - (3.5 - std::f64::consts::TAU)).abs() < 1e-15);
        assert_eq!(wrap_2pi(std::f64::consts::TAU), 0.0);
    }

    #[test]
    fn closest_root_picks_branch() {
        let r = c(1.0f64, 0.0);
        assert_eq!(closest_root(r, c(-0.9, 0.1)), c(-1.0, 0.0));
        assert_eq!(closest_root(r, c(0.9, 0.1)), r);
    }

    #[test]
    fn constants_in_f32() {
        assert_eq!(f32::cst(0.5), 0.5f32);
        assert_eq!(<f32 as Real>::from_count(3), 3.0f32);
    }
}
