//! Rational quadratic differentials `φ = P(z)/Q(z) dz²` on the Riemann sphere.
//!
//! Construction locates and classifies every critical point (finite zeroes,
//! finite poles and the point at infinity).  The spectral double cover
//! `λ² = φ` is represented implicitly through [`SheetPoint`]s, i.e. a point
//! together with a chosen square root of `φ` there.

mod continuation;
mod roots;

pub use continuation::{phi_length, phi_length_with, sqrt_continue, sqrt_continue_with, ContinuationOptions};
pub use roots::{polynomial_roots, Poly, RootFailure};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{closest_root, wrap_2pi, Real, C};

/// Errors raised while constructing or evaluating a quadratic differential.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdError {
    #[error("coefficient list is empty")]
    EmptyPolynomial,
    #[error("leading coefficient of the {0} is zero")]
    ZeroLeadingCoefficient(&'static str),
    #[error("φ has a non-simple zero near {0}")]
    NonSimpleZero(String),
    #[error("numerator and denominator share a root near {0}")]
    CommonFactor(String),
    #[error("φ is not GMN: {0}")]
    NotGMN(&'static str),
    #[error("φ is not complete: it has a simple pole")]
    NotComplete,
    #[error("evaluation at a pole (z = {0})")]
    PoleEvaluation(String),
    #[error("root finding failed to converge")]
    RootFindingFailure,
    #[error("local coefficient at zero {0} is degenerate")]
    DegenerateZero(String),
    #[error("path passes within {distance:e} of a critical point at {point}")]
    PathTooCloseToCriticalPoint { point: String, distance: f64 },
    #[error("sheet-continuity subdivision exceeded the cap of {0} pieces")]
    SubdivisionCapExceeded(usize),
    #[error("path must have at least one vertex")]
    EmptyPath,
}

/// Classification of the critical points of φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalInventory<T> {
    pub zeros: Vec<C<T>>,
    pub finite_poles: Vec<(C<T>, u32)>,
    pub pole_at_infinity: Option<u32>,
    /// Order of vanishing at infinity, when φ is regular and zero there.
    pub zero_at_infinity: Option<u32>,
}

impl<T: Real> CriticalInventory<T> {
    pub fn has_pole(&self) -> bool {
        !self.finite_poles.is_empty() || self.pole_at_infinity.is_some()
    }

    pub fn has_finite_critical_point(&self) -> bool {
        !self.zeros.is_empty()
    }

    /// No pole (finite or at infinity) of order one.
    pub fn complete(&self) -> bool {
        self.finite_poles.iter().all(|&(_, n)| n >= 2) && self.pole_at_infinity != Some(1)
    }

    /// At least one pole and at least one zero (simplicity is enforced at
    /// construction).
    pub fn is_gmn(&self) -> bool {
        self.has_pole() && (self.has_finite_critical_point() || self.zero_at_infinity.is_some())
    }

    /// Finite zeroes followed by finite poles.
    pub fn finite_critical_points(&self) -> Vec<C<T>> {
        self.zeros
            .iter()
            .copied()
            .chain(self.finite_poles.iter().map(|&(p, _)| p))
            .collect()
    }
}

/// A point of the spectral cover: `z` together with a square root of `φ(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint<T> {
    pub z: C<T>,
    /// `+1` when `sqrt_value` is the principal root of `φ(z)`, `−1` otherwise.
    pub sheet: i8,
    pub sqrt_value: C<T>,
}

impl<T: Real> SheetPoint<T> {
    /// The lift of `z` whose square root is closest to `approx`.
    pub fn near(qd: &RationalQd<T>, z: C<T>, approx: C<T>) -> Result<Self, QdError> {
        let principal = qd.eval(z)?.sqrt();
        Ok(Self::from_root(principal, z, closest_root(principal, approx)))
    }

    /// The lift of `z` on the given sheet (relative to the principal root).
    pub fn on_sheet(qd: &RationalQd<T>, z: C<T>, sheet: i8) -> Result<Self, QdError> {
        let principal = qd.eval(z)?.sqrt();
        let v = if sheet >= 0 { principal } else { -principal };
        Ok(Self::from_root(principal, z, v))
    }

    /// The other lift of the same point.
    pub fn flipped(&self) -> Self {
        SheetPoint { z: self.z, sheet: -self.sheet, sqrt_value: -self.sqrt_value }
    }

    fn from_root(principal: C<T>, z: C<T>, v: C<T>) -> Self {
        let sheet = if (v - principal).norm_sqr() <= (v + principal).norm_sqr() { 1 } else { -1 };
        SheetPoint { z, sheet, sqrt_value: v }
    }
}

/// Local data at a simple zero `b`: `φ ≈ c (z − b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFrame<T> {
    pub c: C<T>,
    /// Wall directions at phase 0, indexed by `k`, in `[0, 2π)`.
    pub wall_angles: [T; 3],
    pub branch_cut_angle: T,
}

/// A validated rational quadratic differential.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalQd<T> {
    numerator: Poly<T>,
    denominator: Poly<T>,
    inventory: CriticalInventory<T>,
    /// Minimum distance between distinct finite critical points (∞ if < 2).
    min_separation: T,
}

/// Relative clustering tolerance for declaring two roots equal.
const CLUSTER_TOL: f64 = 1e-8;

impl<T: Real> RationalQd<T> {
    /// Validate `P/Q` and classify its critical points.
    pub fn construct(numerator: Vec<C<T>>, denominator: Vec<C<T>>) -> Result<Self, QdError> {
        if numerator.is_empty() || denominator.is_empty() {
            return Err(QdError::EmptyPolynomial);
        }
        if numerator.last().unwrap().norm() == T::zero() {
            return Err(QdError::ZeroLeadingCoefficient("numerator"));
        }
        if denominator.last().unwrap().norm() == T::zero() {
            return Err(QdError::ZeroLeadingCoefficient("denominator"));
        }
        let p = Poly::new(numerator);
        let q = Poly::new(denominator);

        let zeros = find_simple_roots(&p)?;
        let pole_roots = polynomial_roots(&q).map_err(|_| QdError::RootFindingFailure)?;
        let finite_poles = cluster_poles(&pole_roots);

        let scale = T::one()
            + zeros
                .iter()
                .chain(pole_roots.iter())
                .fold(T::zero(), |m, z| m.max(z.norm()));
        for &(pole, _) in &finite_poles {
            for &z in &zeros {
                if (pole - z).norm() < T::cst(1e-6) * scale {
                    return Err(QdError::CommonFactor(format!("{z}")));
                }
            }
        }

        let order_at_infinity = p.degree() as i64 - q.degree() as i64 + 4;
        let (pole_at_infinity, zero_at_infinity) = match order_at_infinity {
            n if n > 0 => (Some(n as u32), None),
            0 => (None, None),
            n => (None, Some((-n) as u32)),
        };
        if let Some(m) = zero_at_infinity {
            if m >= 2 {
                return Err(QdError::NonSimpleZero("∞".into()));
            }
        }

        let inventory = CriticalInventory { zeros, finite_poles, pole_at_infinity, zero_at_infinity };
        let crit = inventory.finite_critical_points();
        let mut min_separation = T::infinity();
        for i in 0..crit.len() {
            for j in i + 1..crit.len() {
                min_separation = min_separation.min((crit[i] - crit[j]).norm());
            }
        }
        Ok(RationalQd { numerator: p, denominator: q, inventory, min_separation })
    }

    /// Construct from `(re, im)` pairs, the JSON layout.
    pub fn from_pairs(numerator: &[[T; 2]], denominator: &[[T; 2]]) -> Result<Self, QdError> {
        let conv = |v: &[[T; 2]]| v.iter().map(|a| C::new(a[0], a[1])).collect();
        Self::construct(conv(numerator), conv(denominator))
    }

    pub fn numerator(&self) -> &Poly<T> {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly<T> {
        &self.denominator
    }

    pub fn inventory(&self) -> &CriticalInventory<T> {
        &self.inventory
    }

    pub fn zeros(&self) -> &[C<T>] {
        &self.inventory.zeros
    }

    /// Minimum distance between distinct finite critical points.
    pub fn min_separation(&self) -> T {
        self.min_separation
    }

    /// Fail unless φ is complete GMN.
    pub fn require_complete_gmn(&self) -> Result<(), QdError> {
        if !self.inventory.has_pole() {
            return Err(QdError::NotGMN("no pole"));
        }
        if !self.inventory.is_gmn() {
            return Err(QdError::NotGMN("no zero"));
        }
        if !self.inventory.complete() {
            return Err(QdError::NotComplete);
        }
        Ok(())
    }

    /// `φ(z) = P(z)/Q(z)`.
    pub fn eval(&self, z: C<T>) -> Result<C<T>, QdError> {
        let q = self.denominator.eval(z);
        if q.norm() <= T::cst(1e-14) * self.denominator.magnitude_at(z) {
            return Err(QdError::PoleEvaluation(format!("{z}")));
        }
        Ok(self.numerator.eval(z) / q)
    }

    /// `φ`, `φ'` and `φ''` at `z`.
    pub fn eval_d2(&self, z: C<T>) -> Result<(C<T>, C<T>, C<T>), QdError> {
        let (p, dp, ddp) = self.numerator.eval_d2(z);
        let (q, dq, ddq) = self.denominator.eval_d2(z);
        if q.norm() <= T::cst(1e-14) * self.denominator.magnitude_at(z) {
            return Err(QdError::PoleEvaluation(format!("{z}")));
        }
        let two = T::cst(2.0);
        let phi = p / q;
        let n1 = dp * q - p * dq;
        let d1 = n1 / (q * q);
        let d2 = (ddp * q - p * ddq) / (q * q) - dq * n1 * two / (q * q * q);
        Ok((phi, d1, d2))
    }

    /// The principal square root of `φ(z)`.
    pub fn sqrt_principal(&self, z: C<T>) -> Result<C<T>, QdError> {
        Ok(self.eval(z)?.sqrt())
    }

    /// Distance from `z` to the nearest finite critical point.
    pub fn critical_distance(&self, z: C<T>) -> T {
        let zd = self.inventory.zeros.iter().map(|b| (z - *b).norm());
        let pd = self.inventory.finite_poles.iter().map(|(p, _)| (z - *p).norm());
        zd.chain(pd).fold(T::infinity(), T::min)
    }

    /// Local coefficient, wall angles and branch cut at a zero.
    pub fn local_zero_frame(&self, zero: C<T>) -> Result<ZeroFrame<T>, QdError> {
        let (_, c, _) = self.eval_d2(zero)?;
        if c.norm() <= T::cst(1e-12) * (T::one() + self.numerator.norm1()) {
            return Err(QdError::DegenerateZero(format!("{zero}")));
        }
        let angles = wall_angles(c, T::zero());
        Ok(ZeroFrame { c, wall_angles: angles, branch_cut_angle: wrap_2pi(angles[0] + T::PI()) })
    }

    /// `e^{2iα} φ`: rotating φ this way maps phase-θ trajectories to
    /// phase-(θ+α) trajectories.
    pub fn rotated(&self, alpha: T) -> Self {
        let r = crate::scalar::cis(alpha + alpha);
        let num = self.numerator.coeffs.iter().map(|a| *a * r).collect();
        Self::construct(num, self.denominator.coeffs.clone()).expect("rotation preserves validity")
    }

    /// `t² φ` for real `t > 0`.
    pub fn scaled(&self, t: T) -> Self {
        let num = self.numerator.coeffs.iter().map(|a| *a * (t * t)).collect();
        Self::construct(num, self.denominator.coeffs.clone()).expect("scaling preserves validity")
    }
}

/// Outward wall directions at phase θ for a zero with local coefficient `c`:
/// `(2θ + 2πk − arg c)/3`, reduced to `[0, 2π)`.
pub fn wall_angles<T: Real>(c: C<T>, theta: T) -> [T; 3] {
    let three = T::cst(3.0);
    let base = theta + theta - c.arg();
    [0, 1, 2].map(|k| wrap_2pi((base + T::TAU() * T::from_count(k)) / three))
}

/// All roots of `p`, certified simple.
pub fn find_zeros<T: Real>(qd: &RationalQd<T>) -> Vec<C<T>> {
    qd.zeros().to_vec()
}

fn find_simple_roots<T: Real>(p: &Poly<T>) -> Result<Vec<C<T>>, QdError> {
    let roots = polynomial_roots(p).map_err(|_| QdError::RootFindingFailure)?;
    let scale = T::one() + roots.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let tol = T::cst(CLUSTER_TOL) * scale;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= tol {
                return Err(QdError::NonSimpleZero(format!("{}", roots[i])));
            }
        }
    }
    // A root with vanishing derivative is a cluster the eigensolver split
    // further than the tolerance.
    let dp = Poly::new(
        p.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| *a * T::from_count(k))
            .collect(),
    );
    for &r in &roots {
        if dp.coeffs.is_empty() {
            break;
        }
        let slope = dp.eval(r).norm() / p.magnitude_at(r).max(T::min_positive_value());
        if slope < T::cst(1e-6) / scale {
            return Err(QdError::NonSimpleZero(format!("{r}")));
        }
    }
    let mut roots = roots;
    roots.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(roots)
}

/// Group denominator roots into poles with multiplicity.  Multiple roots are
/// ill-conditioned (error ~ ε^{1/m}), so a loose tolerance is used.
fn cluster_poles<T: Real>(roots: &[C<T>]) -> Vec<(C<T>, u32)> {
    let scale = T::one() + roots.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let tol = T::cst(1e-4) * scale;
    let mut poles: Vec<(C<T>, u32, C<T>)> = Vec::new();
    for &r in roots {
        match poles.iter_mut().find(|(_, _, first)| (*first - r).norm() <= tol) {
            Some(entry) => {
                entry.0 += r;
                entry.1 += 1;
            }
            None => poles.push((r, 1, r)),
        }
    }
    let mut out: Vec<(C<T>, u32)> = poles
        .into_iter()
        .map(|(sum, n, _)| (sum / T::from_count(n as usize), n))
        .collect();
    out.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn qd(p: &[f64], q: &[f64]) -> Result<RationalQd<f64>, QdError> {
        RationalQd::construct(
            p.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            q.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    #[test]
    fn toy_inventory() {
        let q = qd(&[0.0, 1.0], &[1.0]).unwrap();
        assert_eq!(q.inventory().pole_at_infinity, Some(5));
        assert_eq!(q.zeros().len(), 1);
        assert!(q.zeros()[0].norm() < 1e-15);
        assert!(q.require_complete_gmn().is_ok());
    }

    #[test]
    fn two_zero_inventory() {
        let q = qd(&[-1.0, 0.0, 1.0], &[1.0]).unwrap();
        assert_eq!(q.inventory().pole_at_infinity, Some(6));
        let z = q.zeros();
        assert!((z[0] + 1.0).norm() < 1e-14 && (z[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn double_zero_rejected() {
        assert!(matches!(qd(&[0.0, 0.0, 1.0], &[1.0]), Err(QdError::NonSimpleZero(_))));
    }

    #[test]
    fn common_factor_rejected() {
        // (z-1)(z+1) / (z-1)^2
        assert!(matches!(qd(&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]), Err(QdError::CommonFactor(_))));
    }

    #[test]
    fn simple_pole_is_incomplete() {
        // φ = z / (z - 2)^1 : simple pole at 2
        let q = qd(&[0.0, 1.0], &[-2.0, 1.0]).unwrap();
        assert!(!q.inventory().complete());
        assert_eq!(q.require_complete_gmn(), Err(QdError::NotComplete));
    }

    #[test]
    fn double_pole_orders() {
        // φ = (z^2 - 1)/z^2 : double pole at 0, ∞ regular (order 2 pole at ∞? deg 2-2+4 = 4)
        let q = qd(&[-1.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.inventory().finite_poles.len(), 1);
        assert_eq!(q.inventory().finite_poles[0].1, 2);
        assert_eq!(q.inventory().pole_at_infinity, Some(4));
    }

    #[test]
    fn constant_differential_has_no_zero() {
        let q = qd(&[1.0], &[1.0]).unwrap();
        assert_eq!(q.require_complete_gmn(), Err(QdError::NotGMN("no zero")));
    }

    #[test]
    fn evaluation() {
        let q = qd(&[-1.0, 0.0, 1.0], &[1.0]).unwrap();
        assert_eq!(q.eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(-1.0, 0.0));
        let p = qd(&[0.0, 1.0], &[-2.0, 0.0, 1.0]);
        // z/(z^2-2) has simple poles; evaluation at a pole errors.
        let p = p.unwrap();
        let pole = Complex64::new(2f64.sqrt(), 0.0);
        assert!(matches!(p.eval(pole), Err(QdError::PoleEvaluation(_))));
    }

    #[test]
    fn derivatives_of_rational() {
        let q = qd(&[1.0, 2.0, 0.0, 1.0], &[3.0, 0.0, 1.0]).unwrap();
        let z = Complex64::new(0.3, 0.7);
        let h = 1e-5;
        let (_, d1, d2) = q.eval_d2(z).unwrap();
        let f = |w: Complex64| q.eval(w).unwrap();
        let fd1 = (f(z + h) - f(z - h)) / (2.0 * h);
        let fd2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        assert!((d1 - fd1).norm() < 1e-8);
        assert!((d2 - fd2).norm() < 1e-4);
    }

    #[test]
    fn zero_frames() {
        let toy = qd(&[0.0, 1.0], &[1.0]).unwrap();
        let f = toy.local_zero_frame(toy.zeros()[0]).unwrap();
        assert!((f.c - 1.0).norm() < 1e-15);
        let tau = std::f64::consts::TAU;
        for (a, e) in f.wall_angles.iter().zip([0.0, tau / 3.0, 2.0 * tau / 3.0]) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!((f.branch_cut_angle - std::f64::consts::PI).abs() < 1e-14);

        let rot = RationalQd::construct(vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let f = rot.local_zero_frame(rot.zeros()[0]).unwrap();
        let pi = std::f64::consts::PI;
        let mut got = f.wall_angles.to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, e) in got.iter().zip([pi / 3.0, pi, 5.0 * pi / 3.0]) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn sheet_points() {
        let toy = qd(&[0.0, 1.0], &[1.0]).unwrap();
        let z = Complex64::new(4.0, 0.0);
        let p = SheetPoint::on_sheet(&toy, z, 1).unwrap();
        assert_eq!(p.sqrt_value, Complex64::new(2.0, 0.0));
        let m = SheetPoint::near(&toy, z, Complex64::new(-1.0, 0.1)).unwrap();
        assert_eq!(m.sheet, -1);
        assert_eq!(m.flipped().sheet, 1);
    }
}
