//! Saddle charges, real-exactness and the horizontal W-difference.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::point_segment_distance;
use crate::network::{NetworkError, SpectralNetwork};
use crate::qdiff::{sqrt_continue, QdError, RationalQd, SheetPoint};
use crate::scalar::{cis, Real, C};
use crate::trajectory::{trace_wall, IntegrationParams, Termination, TraceError, Trajectory};

/// Errors raised by charge computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChargeError {
    #[error("trajectory is not a saddle (it must start at a zero and end in a zero hit)")]
    NotASaddle,
    #[error("W-difference depends on the base zero (mismatch {mismatch:e}); φ is not real-exact")]
    RealExactnessRequired { mismatch: f64 },
    #[error("point lies on the vertical network, where the sheets are not ordered")]
    OnVerticalNetwork,
    #[error("W-differences need a network built at phase 0 (got {0})")]
    NetworkPhase(f64),
    #[error("no zero can be joined to the point by a clear straight or bent path")]
    NoReachableZero,
    #[error(transparent)]
    Qd(#[from] QdError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A saddle class with its charge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleClass<T> {
    pub endpoints: (usize, usize),
    pub phase: T,
    /// φ-length of the saddle trajectory.
    pub length: T,
    /// Normalized representative in the closed upper half-plane ∪ ℝ₊.
    pub charge: C<T>,
}

/// Sheet ordering at a point: the lift with larger `W`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SheetOrdering<T> {
    pub z: C<T>,
    /// Plus lift, as a sheet relative to the principal root.
    pub plus_sheet: i8,
    pub w_diff: T,
}

/// Result of the real-exactness test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport<T> {
    pub saddles: Vec<SaddleClass<T>>,
    pub real_exact: bool,
    pub residuals: Vec<T>,
}

/// `(2/3) u √φ(b+u) (1 − d u/(5c))`: `∫_b^{b+u} √φ dz` to third order, on
/// the branch of `sqrt_at`.
fn local_integral<T: Real>(c: C<T>, d: C<T>, u: C<T>, sqrt_at: C<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    sqrt_at * u * T::cst(2.0 / 3.0) * (one - d * u / (c * T::cst(5.0)))
}

/// Normalize a charge into the closed upper half-plane ∪ ℝ₊.
pub fn normalize_charge<T: Real>(z: C<T>) -> C<T> {
    if z.im < T::zero() || (z.im == T::zero() && z.re < T::zero()) {
        -z
    } else {
        z
    }
}

/// Charge of a saddle trajectory traced from a zero into another zero.
pub fn saddle_charge<T: Real>(qd: &RationalQd<T>, saddle: &Trajectory<T>) -> Result<SaddleClass<T>, ChargeError> {
    let (Some(i), Termination::ZeroHit(j)) = (saddle.origin_zero, saddle.termination) else {
        return Err(ChargeError::NotASaddle);
    };
    let bj = qd.zeros()[j];
    let (_, cj, _) = qd.eval_d2(bj)?;
    let delta = (saddle.end().z - bj).norm();
    let tail = T::cst(2.0 / 3.0) * cj.norm().sqrt() * delta * delta.sqrt();
    let length = saddle.offset_length + saddle.length() + tail;
    let charge = normalize_charge(cis(-saddle.phase) * (length + length));
    Ok(SaddleClass { endpoints: (i.min(j), i.max(j)), phase: saddle.phase, length, charge })
}

/// Signed vertical offset of zero `j` from a trajectory, evaluated at the
/// trajectory's closest approach to `b_j` with the local series for
/// `W(b_j) − W(z)`.  `None` when the approach is not close.
fn signed_miss<T: Real>(qd: &RationalQd<T>, traj: &Trajectory<T>, j: usize, near: T) -> Option<T> {
    let b = qd.zeros()[j];
    let dense = traj.dense(qd, T::cst(0.02), T::cst(0.05));
    let (z, s) = dense
        .into_iter()
        .min_by(|x, y| (x.0 - b).norm().partial_cmp(&(y.0 - b).norm()).unwrap_or(std::cmp::Ordering::Equal))?;
    if (z - b).norm() >= near {
        return None;
    }
    let (_, c, dd) = qd.eval_d2(b).ok()?;
    let w = -local_integral(c, dd * T::cst(0.5), z - b, s);
    Some((cis(-traj.phase) * w).im)
}

/// Saddle classes found by a phase sweep over `[0, π)` with `n_phases`
/// grid points, refined by bisection on the signed miss distance.
pub fn standard_saddles_with<T: Real>(
    qd: &RationalQd<T>,
    params: &IntegrationParams<T>,
    n_phases: usize,
) -> Result<Vec<SaddleClass<T>>, ChargeError> {
    let nz = qd.zeros().len();
    if nz < 2 {
        return Ok(Vec::new());
    }
    let near = T::cst(0.25) * qd.min_separation();
    let walls: Vec<(usize, usize)> = (0..nz).flat_map(|i| (0..3).map(move |k| (i, k))).collect();
    let phase = |g: usize| T::PI() * T::from_count(g) / T::from_count(n_phases);

    // misses[g][w][j]
    let misses: Vec<Vec<Vec<Option<T>>>> = (0..=n_phases)
        .into_par_iter()
        .map(|g| {
            let theta = phase(g);
            walls
                .iter()
                .map(|&(i, k)| {
                    let traj = trace_wall(qd, i, k, theta, params)?;
                    Ok((0..nz).map(|j| if j == i { None } else { signed_miss(qd, &traj, j, near) }).collect())
                })
                .collect::<Result<Vec<_>, TraceError>>()
        })
        .collect::<Result<Vec<_>, TraceError>>()?;

    let mut brackets = Vec::new();
    for g in 0..n_phases {
        for (wi, &(i, k)) in walls.iter().enumerate() {
            for j in 0..nz {
                if let (Some(a), Some(b)) = (misses[g][wi][j], misses[g + 1][wi][j]) {
                    if a * b <= T::zero() {
                        brackets.push((i, k, j, phase(g), phase(g + 1), a));
                    }
                }
            }
        }
    }

    let refined: Vec<Option<SaddleClass<T>>> = brackets
        .par_iter()
        .map(|&(i, k, j, lo, hi, m_lo)| refine_saddle(qd, params, i, k, j, lo, hi, m_lo, near))
        .collect::<Result<Vec<_>, ChargeError>>()?;

    let mut out: Vec<SaddleClass<T>> = Vec::new();
    for mut sc in refined.into_iter().flatten() {
        if sc.phase >= T::PI() - T::cst(1e-12) {
            sc.phase -= T::PI();
        }
        let dup = out.iter().any(|o| {
            let dp = (o.phase - sc.phase).abs();
            o.endpoints == sc.endpoints && (dp < T::cst(1e-7) || (T::PI() - dp).abs() < T::cst(1e-7))
        });
        if !dup {
            out.push(sc);
        }
    }
    out.sort_by(|a, b| {
        (a.endpoints, a.phase)
            .partial_cmp(&(b.endpoints, b.phase))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn refine_saddle<T: Real>(
    qd: &RationalQd<T>,
    params: &IntegrationParams<T>,
    i: usize,
    k: usize,
    j: usize,
    mut lo: T,
    mut hi: T,
    m_lo: T,
    near: T,
) -> Result<Option<SaddleClass<T>>, ChargeError> {
    let mut s_lo = m_lo.signum();
    while hi - lo > T::cst(1e-11) {
        let mid = (lo + hi) * T::cst(0.5);
        let traj = trace_wall(qd, i, k, mid, params)?;
        let Some(m) = signed_miss(qd, &traj, j, near) else { return Ok(None) };
        if m == T::zero() {
            lo = mid;
            hi = mid;
            break;
        }
        if m.signum() == s_lo || s_lo == T::zero() {
            lo = mid;
            s_lo = m.signum();
        } else {
            hi = mid;
        }
    }
    let theta = (lo + hi) * T::cst(0.5);
    let traj = trace_wall(qd, i, k, theta, params)?;
    if traj.termination != Termination::ZeroHit(j) {
        return Ok(None);
    }
    Ok(Some(saddle_charge(qd, &traj)?))
}

/// Saddle classes from the standard 720-phase sweep.
pub fn standard_saddles<T: Real>(qd: &RationalQd<T>, params: &IntegrationParams<T>) -> Result<Vec<SaddleClass<T>>, ChargeError> {
    standard_saddles_with(qd, params, 720)
}

/// Relative real parts of all saddle charges; real-exact iff all < 1e-6.
pub fn is_real_exact<T: Real>(qd: &RationalQd<T>, params: &IntegrationParams<T>) -> Result<ExactnessReport<T>, ChargeError> {
    let saddles = standard_saddles(qd, params)?;
    Ok(exactness_from(saddles))
}

/// Real-exactness verdict from a saddle inventory.
pub fn exactness_from<T: Real>(saddles: Vec<SaddleClass<T>>) -> ExactnessReport<T> {
    let residuals: Vec<T> = saddles.iter().map(|s| s.charge.re.abs() / s.charge.norm()).collect();
    let real_exact = residuals.iter().all(|r| *r < T::cst(1e-6));
    ExactnessReport { saddles, real_exact, residuals }
}

/// `∫_b^z √φ dz` along `path` (which starts at the zero `b`), on the
/// principal branch at the first regular point, with its final lift.
fn integral_from_zero<T: Real>(qd: &RationalQd<T>, b: C<T>, path: &[C<T>]) -> Result<(C<T>, SheetPoint<T>), ChargeError> {
    let first = path[1] - b;
    let rho = T::cst(1e-6) * first.norm();
    let u = first / first.norm() * rho;
    let start = SheetPoint::on_sheet(qd, b + u, 1)?;
    let (_, c, dd) = qd.eval_d2(b)?;
    let local = local_integral(c, dd * T::cst(0.5), u, start.sqrt_value);
    let mut rest = vec![b + u];
    rest.extend_from_slice(&path[1..]);
    let (end, integral) = sqrt_continue(qd, &rest, &start)?;
    Ok((local + integral, end))
}

/// A clear path from zero `b` to `z`: straight, or bent once sideways.
fn clear_path<T: Real>(qd: &RationalQd<T>, b: C<T>, z: C<T>) -> Option<Vec<C<T>>> {
    let others: Vec<C<T>> = qd
        .inventory()
        .finite_critical_points()
        .into_iter()
        .filter(|p| (*p - b).norm() > T::zero())
        .collect();
    let len = (z - b).norm();
    let margin = T::cst(0.05) * len.min(qd.min_separation());
    let clear = |path: &[C<T>]| {
        path.windows(2).all(|w| others.iter().all(|&p| point_segment_distance(p, w[0], w[1]) > margin))
    };
    let straight = vec![b, z];
    if clear(&straight) {
        return Some(straight);
    }
    let mid = (b + z) * T::cst(0.5);
    let normal = (z - b) * C::new(T::zero(), T::one());
    for f in [0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
        let p = vec![b, mid + normal * T::cst(f), z];
        if clear(&p) {
            return Some(p);
        }
    }
    None
}

/// Twice the horizontal distance from `z` to a zero, with the sheet order.
pub fn w_diff<T: Real>(qd: &RationalQd<T>, net: &SpectralNetwork<T>, z: C<T>) -> Result<SheetOrdering<T>, ChargeError> {
    if net.theta.abs() > T::cst(1e-12) {
        return Err(ChargeError::NetworkPhase(net.theta.f64()));
    }
    let mut order: Vec<usize> = (0..qd.zeros().len()).collect();
    order.sort_by(|&a, &b| {
        (qd.zeros()[a] - z)
            .norm()
            .partial_cmp(&(qd.zeros()[b] - z).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut results = Vec::new();
    for &i in &order {
        let b = qd.zeros()[i];
        if let Some(path) = clear_path(qd, b, z) {
            results.push(integral_from_zero(qd, b, &path)?);
            if results.len() == 2 {
                break;
            }
        }
    }
    let Some(&(integral, end)) = results.first() else { return Err(ChargeError::NoReachableZero) };
    let w = (integral.re + integral.re).abs();
    if w < T::cst(1e-8) * (T::one() + integral.norm()) {
        return Err(ChargeError::OnVerticalNetwork);
    }
    if let Some(&(other, _)) = results.get(1) {
        let w2 = (other.re + other.re).abs();
        let mismatch = (w - w2).abs();
        if mismatch > T::cst(1e-7) * (T::one() + w) {
            return Err(ChargeError::RealExactnessRequired { mismatch: mismatch.f64() });
        }
    }
    let plus_sheet = if integral.re > T::zero() { end.sheet } else { -end.sheet };
    Ok(SheetOrdering { z, plus_sheet, w_diff: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn normalization() {
        assert_eq!(normalize_charge(Complex64::new(0.0, -1.0)), Complex64::new(0.0, 1.0));
        assert_eq!(normalize_charge(Complex64::new(-2.0, 0.0)), Complex64::new(2.0, 0.0));
        assert_eq!(normalize_charge(Complex64::new(-2.0, 1.0)), Complex64::new(-2.0, 1.0));
    }

    #[test]
    fn local_series_is_third_order() {
        // φ = z + z²: c = 1, d = 1 at b = 0.
        let q = RationalQd::construct(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let u = Complex64::new(1e-2, 0.0);
        let s = q.eval(u).unwrap().sqrt();
        let approx = local_integral(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), u, s);
        // ∫_0^u √(x + x²) dx by fine quadrature.
        let n = 200000;
        let exact: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64 * 1e-2;
                (x + x * x).sqrt() * 1e-2 / n as f64
            })
            .sum();
        // The first neglected term is (3/20 − 1/28)·u^{7/2}.
        let err = (approx.re - exact).abs();
        assert!(err < 0.12 * 1e-7 && err > 0.1 * 1e-7, "{} {}", approx.re, exact);
    }
}
