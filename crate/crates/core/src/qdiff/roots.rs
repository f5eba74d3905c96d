//! Polynomial roots: companion-matrix eigenvalues followed by Newton polish.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::scalar::{Real, C};

/// Complex polynomial with ascending-degree coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> Poly<T> {
    pub fn new(coeffs: Vec<C<T>>) -> Self {
        Poly { coeffs }
    }

    /// Degree, treating the stored leading coefficient as nonzero.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C<T> {
        *self.coeffs.last().expect("nonempty polynomial")
    }

    pub fn eval(&self, z: C<T>) -> C<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(C::new(T::zero(), T::zero()), |acc, &a| acc * z + a)
    }

    /// Value and first two derivatives at `z`.
    pub fn eval_d2(&self, z: C<T>) -> (C<T>, C<T>, C<T>) {
        let zero = C::new(T::zero(), T::zero());
        let (mut p, mut dp, mut ddp) = (zero, zero, zero);
        for &a in self.coeffs.iter().rev() {
            ddp = ddp * z + dp;
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp, ddp + ddp)
    }

    /// Sum of coefficient magnitudes.
    pub fn norm1(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, a| acc + a.norm())
    }

    /// Σ|a_k||z|^k — the natural rounding scale for evaluating at `z`.
    pub fn magnitude_at(&self, z: C<T>) -> T {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, a| acc * r + a.norm())
    }
}

/// Reasons root finding can fail.
#[derive(Debug, Clone, PartialEq)]
pub enum RootFailure {
    Eigensolver,
    NoConvergence,
}

/// All roots of `p` (with multiplicity, unordered), polished in `T`.
pub fn polynomial_roots<T: Real>(p: &Poly<T>) -> Result<Vec<C<T>>, RootFailure> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    let to64 = |a: C<T>| Complex64::new(a.re.f64(), a.im.f64());
    let approx: Vec<Complex64> = if n == 1 {
        vec![-to64(p.coeffs[0]) / to64(lead)]
    } else {
        let lead64 = to64(lead);
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -to64(p.coeffs[i]) / lead64;
        }
        let schur = m.schur();
        let (_, t) = schur.unpack();
        (0..n).map(|i| t[(i, i)]).collect()
    };
    if approx.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(RootFailure::Eigensolver);
    }
    approx
        .into_iter()
        .map(|z| newton_polish(p, C::new(T::cst(z.re), T::cst(z.im))))
        .collect()
}

/// Newton iteration from `z0`; stops when the update no longer shrinks.
fn newton_polish<T: Real>(p: &Poly<T>, z0: C<T>) -> Result<C<T>, RootFailure> {
    let eps = T::epsilon();
    let mut z = z0;
    let mut last_step = T::infinity();
    for _ in 0..100 {
        let (v, dv, _) = p.eval_d2(z);
        if v.norm() <= eps * p.magnitude_at(z) {
            return Ok(z);
        }
        if dv.norm() == T::zero() {
            // Multiple root: the eigenvalue estimate is as good as it gets.
            return Ok(z);
        }
        let step = v / dv;
        let size = step.norm();
        if !size.is_finite() {
            return Err(RootFailure::NoConvergence);
        }
        if size >= last_step && size <= T::cst(1e3) * eps * (T::one() + z.norm()) {
            return Ok(z);
        }
        if size > T::cst(4.0) * last_step {
            // Diverging away from the eigenvalue estimate; keep the estimate.
            return Ok(z);
        }
        z -= step;
        last_step = size;
        if size <= eps * (T::one() + z.norm()) {
            return Ok(z);
        }
    }
    let (v, _, _) = p.eval_d2(z);
    if v.norm() <= T::cst(1e3) * eps * p.magnitude_at(z) {
        Ok(z)
    } else {
        Err(RootFailure::NoConvergence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(f64, f64)]) -> Poly<f64> {
        Poly::new(c.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
    }

    #[test]
    fn quadratic_roots() {
        let p = poly(&[(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let mut r = polynomial_roots(&p).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] + 1.0).norm() < 1e-14);
        assert!((r[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn complex_coefficients() {
        // (z - i)(z + 2 - i) = z^2 + (2 - 2i) z + (-2i - 1)
        let p = poly(&[(-1.0, -2.0), (2.0, -2.0), (1.0, 0.0)]);
        let r = polynomial_roots(&p).unwrap();
        for z in r {
            assert!(p.eval(z).norm() < 1e-13);
        }
    }

    #[test]
    fn derivatives_by_horner() {
        let p = poly(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        let z = Complex64::new(0.5, -0.25);
        let (v, d, dd) = p.eval_d2(z);
        assert!((v - (1.0 + 2.0 * z + 3.0 * z * z + 4.0 * z * z * z)).norm() < 1e-14);
        assert!((d - (2.0 + 6.0 * z + 12.0 * z * z)).norm() < 1e-14);
        assert!((dd - (6.0 + 24.0 * z)).norm() < 1e-14);
    }

    #[test]
    fn roots_in_f32() {
        let p = Poly::new(vec![
            num_complex::Complex32::new(-2.0, 0.0),
            num_complex::Complex32::new(0.0, 0.0),
            num_complex::Complex32::new(1.0, 0.0),
        ]);
        let r = polynomial_roots(&p).unwrap();
        for z in r {
            assert!((z.norm() - 2f32.sqrt()).abs() < 1e-5);
        }
    }
}
