//! 2×2 matrices over a [`Field`].

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::Field;

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2<S> {
    pub m: [[S; 2]; 2],
}

impl<S: Field> Mat2<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::diag(S::one(), S::one())
    }

    pub fn diag(a: S, d: S) -> Self {
        Self::new(a, S::zero(), S::zero(), d)
    }

    /// Anti-diagonal matrix `[[0, b], [c, 0]]`.
    pub fn anti(b: S, c: S) -> Self {
        Self::new(S::zero(), b, c, S::zero())
    }

    /// The basis swap `[[0, 1], [1, 0]]`.
    pub fn swap() -> Self {
        Self::anti(S::one(), S::one())
    }

    /// Upper unipotent `[[1, x], [0, 1]]`.
    pub fn upper(x: S) -> Self {
        Self::new(S::one(), x, S::zero(), S::one())
    }

    /// Lower unipotent `[[1, 0], [x, 1]]`.
    pub fn lower(x: S) -> Self {
        Self::new(S::one(), S::zero(), x, S::one())
    }

    pub fn det(&self) -> S {
        let [[a, b], [c, d]] = &self.m;
        a.clone() * d.clone() - b.clone() * c.clone()
    }

    pub fn trace(&self) -> S {
        self.m[0][0].clone() + self.m[1][1].clone()
    }

    /// Inverse, or `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == S::zero() {
            return None;
        }
        let [[a, b], [c, d]] = &self.m;
        Some(Self::new(
            d.clone() / det.clone(),
            -b.clone() / det.clone(),
            -c.clone() / det.clone(),
            a.clone() / det,
        ))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][j].clone() - other.m[i][j].clone();
            }
        }
        out
    }

    /// Operator ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.m
            .iter()
            .map(|row| row[0].modulus() + row[1].modulus())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(Field::modulus).fold(0.0, f64::max)
    }

    /// `‖self − I‖_∞`.
    pub fn distance_to_identity(&self) -> f64 {
        self.sub(&Self::identity()).norm_inf()
    }
}

impl<S: Field> Mul for Mat2<S> {
    type Output = Mat2<S>;
    fn mul(self, rhs: Mat2<S>) -> Mat2<S> {
        &self * &rhs
    }
}

impl<S: Field> Mul<&Mat2<S>> for &Mat2<S> {
    type Output = Mat2<S>;
    fn mul(self, rhs: &Mat2<S>) -> Mat2<S> {
        let a = &self.m;
        let b = &rhs.m;
        let e = |i: usize, j: usize| a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone();
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(-1.0, 0.3),
            Complex64::new(2.0, -1.0),
        );
        let p = &m * &m.inverse().unwrap();
        assert!(p.distance_to_identity() < 1e-15);
    }

    #[test]
    fn unipotents_have_unit_determinant() {
        let x = Complex64::new(3.0, -4.0);
        assert_eq!(Mat2::upper(x).det(), Complex64::new(1.0, 0.0));
        assert_eq!(Mat2::lower(x).det(), Complex64::new(1.0, 0.0));
        assert_eq!(Mat2::<Complex64>::swap().det(), Complex64::new(-1.0, 0.0));
    }
}
