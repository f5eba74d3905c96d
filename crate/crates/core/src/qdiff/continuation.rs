//! Analytic continuation of `√φ` along polylines with adaptive
//! Gauss–Kronrod integration of `√φ dz` and `|√φ| |dz|`.

use crate::scalar::{closest_root, Real, C};

use super::{QdError, RationalQd, SheetPoint};

/// Tolerances for continuation and quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions<T> {
    /// Minimum admissible distance between the path and a critical point.
    pub safety_radius: T,
    /// Relative tolerance of the per-piece quadrature.
    pub rel_tol: T,
    /// Cap on the number of sheet-continuity pieces per call.
    pub max_subdivisions: usize,
}

impl<T: Real> Default for ContinuationOptions<T> {
    fn default() -> Self {
        ContinuationOptions { safety_radius: T::cst(1e-12), rel_tol: T::cst(1e-10), max_subdivisions: 1 << 16 }
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct PieceResult<T> {
    integral: C<T>,
    length: T,
    end_sqrt: C<T>,
}

/// Continue `initial` along `path`, returning the final lift and `∫√φ dz`.
pub fn sqrt_continue<T: Real>(
    qd: &RationalQd<T>,
    path: &[C<T>],
    initial: &SheetPoint<T>,
) -> Result<(SheetPoint<T>, C<T>), QdError> {
    sqrt_continue_with(qd, path, initial, &ContinuationOptions::default())
}

/// [`sqrt_continue`] with explicit options.
pub fn sqrt_continue_with<T: Real>(
    qd: &RationalQd<T>,
    path: &[C<T>],
    initial: &SheetPoint<T>,
    opts: &ContinuationOptions<T>,
) -> Result<(SheetPoint<T>, C<T>), QdError> {
    let (end, integral, _) = walk(qd, path, initial.sqrt_value, opts)?;
    let last = *path.last().ok_or(QdError::EmptyPath)?;
    let fin = SheetPoint::near(qd, last, end)?;
    Ok((fin, integral))
}

/// φ-length `∫|√φ||dz|` of a polyline.
pub fn phi_length<T: Real>(qd: &RationalQd<T>, path: &[C<T>]) -> Result<T, QdError> {
    phi_length_with(qd, path, &ContinuationOptions::default())
}

/// [`phi_length`] with explicit options.
pub fn phi_length_with<T: Real>(
    qd: &RationalQd<T>,
    path: &[C<T>],
    opts: &ContinuationOptions<T>,
) -> Result<T, QdError> {
    let first = *path.first().ok_or(QdError::EmptyPath)?;
    check_clearance(qd, &[first], opts)?;
    let start = qd.sqrt_principal(first)?;
    let (_, _, len) = walk(qd, path, start, opts)?;
    Ok(len)
}

fn check_clearance<T: Real>(qd: &RationalQd<T>, path: &[C<T>], opts: &ContinuationOptions<T>) -> Result<(), QdError> {
    let crit = qd.inventory().finite_critical_points();
    let check = |a: C<T>, b: C<T>| -> Result<(), QdError> {
        for &p in &crit {
            let d = crate::geometry::point_segment_distance(p, a, b);
            if d <= opts.safety_radius {
                return Err(QdError::PathTooCloseToCriticalPoint { point: format!("{p}"), distance: d.f64() });
            }
        }
        Ok(())
    };
    if path.len() == 1 {
        return check(path[0], path[0]);
    }
    for w in path.windows(2) {
        check(w[0], w[1])?;
    }
    Ok(())
}

/// Walk the path, returning (final √φ, ∫√φ dz, ∫|√φ||dz|).
fn walk<T: Real>(
    qd: &RationalQd<T>,
    path: &[C<T>],
    start_sqrt: C<T>,
    opts: &ContinuationOptions<T>,
) -> Result<(C<T>, C<T>, T), QdError> {
    if path.is_empty() {
        return Err(QdError::EmptyPath);
    }
    check_clearance(qd, path, opts)?;
    let mut s = closest_root(qd.sqrt_principal(path[0])?, start_sqrt);
    let mut integral = C::new(T::zero(), T::zero());
    let mut length = T::zero();
    let mut pieces = 0usize;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let seg_len = (b - a).norm();
        let mut t = T::zero();
        let mut h = T::one();
        while t < T::one() {
            h = h.min(T::one() - t);
            // Shrink until the piece is short relative to the distance to the
            // critical set and √φ changes by less than half its size.
            loop {
                let za = a + (b - a) * t;
                let zb = a + (b - a) * (t + h);
                let clearance = qd.critical_distance(za).min(qd.critical_distance(zb));
                let short = h * seg_len <= T::cst(0.25) * clearance;
                if short {
                    let sb = closest_root(qd.sqrt_principal(zb)?, s);
                    if (sb - s).norm() < T::cst(0.5) * s.norm() {
                        break;
                    }
                }
                h = h * T::cst(0.5);
                if h * seg_len <= T::epsilon() * (T::one() + za.norm()) {
                    return Err(QdError::SubdivisionCapExceeded(opts.max_subdivisions));
                }
            }
            pieces += 1;
            if pieces > opts.max_subdivisions {
                return Err(QdError::SubdivisionCapExceeded(opts.max_subdivisions));
            }
            let za = a + (b - a) * t;
            let zb = a + (b - a) * (t + h);
            let r = adaptive_piece(qd, za, zb, s, opts.rel_tol, 0)?;
            integral += r.integral;
            length += r.length;
            s = r.end_sqrt;
            t = if t + h >= T::one() { T::one() } else { t + h };
            h = h + h;
        }
    }
    Ok((s, integral, length))
}

/// One G7–K15 panel on `[za, zb]` evaluated with branch continuation from
/// `s_start`; returns (Kronrod ∫√φ dz, Gauss ∫√φ dz, Kronrod length, Gauss
/// length, √φ at zb).
#[allow(clippy::type_complexity)]
fn panel<T: Real>(
    qd: &RationalQd<T>,
    za: C<T>,
    zb: C<T>,
    s_start: C<T>,
) -> Result<(C<T>, C<T>, T, T, C<T>), QdError> {
    let half = (zb - za) * T::cst(0.5);
    let mid = za + half;
    let habs = half.norm();
    let mut s = s_start;
    let zero = C::new(T::zero(), T::zero());
    let (mut ik, mut ig) = (zero, zero);
    let (mut lk, mut lg) = (T::zero(), T::zero());
    // Nodes in path order: −x0 … −x6, 0, x6 … x0.
    for idx in 0..15usize {
        let (node, wi) = if idx < 7 { (-T::cst(XGK[idx]), idx) } else if idx == 7 { (T::zero(), 7) } else { (T::cst(XGK[14 - idx]), 14 - idx) };
        let z = mid + half * node;
        s = closest_root(qd.sqrt_principal(z)?, s);
        let wk = T::cst(WGK[wi]);
        ik += s * wk;
        lk += s.norm() * wk;
        if wi % 2 == 1 {
            let wg = T::cst(WG[wi / 2]);
            ig += s * wg;
            lg += s.norm() * wg;
        }
    }
    let end = closest_root(qd.sqrt_principal(zb)?, s);
    Ok((ik * half, ig * half, lk * habs, lg * habs, end))
}

fn adaptive_piece<T: Real>(
    qd: &RationalQd<T>,
    za: C<T>,
    zb: C<T>,
    s_start: C<T>,
    rel_tol: T,
    depth: u32,
) -> Result<PieceResult<T>, QdError> {
    let (ik, ig, lk, lg, end) = panel(qd, za, zb, s_start)?;
    let err_i = (ik - ig).norm();
    let err_l = (lk - lg).abs();
    let floor = T::cst(1e-15) * lk;
    if depth >= 30 || (err_i <= rel_tol * ik.norm() + floor && err_l <= rel_tol * lk + floor) {
        return Ok(PieceResult { integral: ik, length: lk, end_sqrt: end });
    }
    let zm = (za + zb) * T::cst(0.5);
    let left = adaptive_piece(qd, za, zm, s_start, rel_tol, depth + 1)?;
    let right = adaptive_piece(qd, zm, zb, left.end_sqrt, rel_tol, depth + 1)?;
    Ok(PieceResult {
        integral: left.integral + right.integral,
        length: left.length + right.length,
        end_sqrt: right.end_sqrt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn toy() -> RationalQd<f64> {
        RationalQd::construct(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn closed_form_integral() {
        let q = toy();
        let start = SheetPoint::on_sheet(&q, Complex64::new(1.0, 0.0), 1).unwrap();
        let (end, i) = sqrt_continue(&q, &[Complex64::new(1.0, 0.0), Complex64::new(4.0, 0.0)], &start).unwrap();
        assert!((i - 14.0 / 3.0).norm() < 1e-12);
        assert_eq!(end.sheet, 1);
        assert!((end.sqrt_value - 2.0).norm() < 1e-14);
    }

    #[test]
    fn loop_around_zero_flips_sheet() {
        let q = toy();
        let path: Vec<Complex64> = (0..=64)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0))
            .collect();
        let start = SheetPoint::on_sheet(&q, path[0], 1).unwrap();
        let (end, _) = sqrt_continue(&q, &path, &start).unwrap();
        assert!((end.sqrt_value + start.sqrt_value).norm() < 1e-12);
    }

    #[test]
    fn length_in_flat_metric_is_euclidean() {
        let flat = RationalQd::construct(vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let l = phi_length(&flat, &[Complex64::new(0.0, 0.0), Complex64::new(3.0, 4.0)]).unwrap();
        assert!((l - 5.0).abs() < 1e-13);
    }

    #[test]
    fn length_of_the_vertical_saddle() {
        let q = RationalQd::construct(
            vec![Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let eps = 1e-10;
        let l = phi_length(&q, &[Complex64::new(-1.0 + eps, 0.0), Complex64::new(1.0 - eps, 0.0)]).unwrap();
        assert!((l - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn too_close_to_zero() {
        let q = toy();
        let start = SheetPoint::on_sheet(&q, Complex64::new(-1.0, 0.0), 1).unwrap();
        let r = sqrt_continue(&q, &[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)], &start);
        assert!(matches!(r, Err(QdError::PathTooCloseToCriticalPoint { .. })));
    }

    #[test]
    fn subdivision_cap() {
        let q = toy();
        let opts = ContinuationOptions { max_subdivisions: 4, ..Default::default() };
        let start = SheetPoint::on_sheet(&q, Complex64::new(1e-3, 0.0), 1).unwrap();
        let r = sqrt_continue_with(&q, &[Complex64::new(1e-3, 0.0), Complex64::new(10.0, 0.0)], &start, &opts);
        assert!(matches!(r, Err(QdError::SubdivisionCapExceeded(4))));
    }
}
