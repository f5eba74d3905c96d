//! The spectral network `S(θ)`: three walls per simple zero, labelled by
//! which lift of the base point is the wall's positive sheet.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{bounding_box, point_polyline_distance, point_segment_distance, segment_intersection};
use crate::qdiff::{wall_angles, QdError, RationalQd};
use crate::scalar::{cis, closest_root, wrap_2pi, wrap_pi, Real, C};
use crate::trajectory::{trace_wall, IntegrationParams, Termination, TraceError, Trajectory};

/// Errors raised by network construction and crossing queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Qd(#[from] QdError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("φ has a zero at infinity; walls from it cannot be traced")]
    ZeroAtInfinity,
    #[error("wall {wall} passes within 2× the hit radius of zero {zero} (distance {distance:e}) without a hit")]
    SaddleAmbiguity { wall: usize, zero: usize, distance: f64 },
    #[error("no saddle-free phase within π/2 of the requested phase")]
    NoSaddleFreePhaseFound,
    #[error("path crosses wall {wall} tangentially (angle {angle:e} rad)")]
    TangentialCrossing { wall: usize, angle: f64 },
    #[error("path endpoint lies on wall {wall}")]
    EndpointOnWall { wall: usize },
    #[error("path passes within the hit radius of zero {zero}")]
    PathThroughZero { zero: usize },
}

/// Which lift is the wall's positive sheet, relative to the branch-cut
/// sheet assignment at its zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SheetLabel {
    PlusMinus,
    MinusPlus,
}

impl SheetLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SheetLabel::PlusMinus => "+-",
            SheetLabel::MinusPlus => "-+",
        }
    }
}

impl Serialize for SheetLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// A wall: a trajectory leaving a zero, oriented outward.
#[derive(Clone, Debug)]
pub struct Wall<T> {
    pub id: usize,
    pub parent_zero: usize,
    pub k: usize,
    pub trajectory: Trajectory<T>,
    pub label: SheetLabel,
    /// `(zero index, partner wall id)` when the wall is a saddle.
    pub saddle_partner: Option<(usize, usize)>,
    /// Densified polyline from the zero outward, with `√φ` on the positive
    /// sheet at each vertex.
    pub dense: Vec<(C<T>, C<T>)>,
    bbox: (T, T, T, T),
}

impl<T: Real> Wall<T> {
    pub fn polyline(&self) -> Vec<C<T>> {
        self.dense.iter().map(|p| p.0).collect()
    }
}

/// A branch cut ray at a zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchCut<T> {
    pub zero: usize,
    pub angle: T,
}

/// All walls at phase θ.
#[derive(Clone, Debug)]
pub struct SpectralNetwork<T> {
    pub theta: T,
    pub walls: Vec<Wall<T>>,
    pub saddle_free: bool,
    pub branch_cuts: Vec<BranchCut<T>>,
    pub zeros: Vec<C<T>>,
    pub params: IntegrationParams<T>,
}

impl<T: Real> SpectralNetwork<T> {
    /// Walls of a zero, indexed by `k`.
    pub fn walls_of(&self, zero: usize) -> [&Wall<T>; 3] {
        [0, 1, 2].map(|k| &self.walls[3 * zero + k])
    }

    /// Euclidean distance from `z` to the nearest wall.
    pub fn distance_to_network(&self, z: C<T>) -> T {
        self.walls
            .iter()
            .map(|w| point_polyline_distance(z, &w.polyline()))
            .fold(T::infinity(), T::min)
    }
}

impl<T: Real> Serialize for SpectralNetwork<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct WallOut<'a, T: Real> {
            id: usize,
            parent_zero: usize,
            k: usize,
            label: SheetLabel,
            points: Vec<[T; 2]>,
            termination: Termination,
            saddle_partner: Option<(usize, usize)>,
            #[serde(skip)]
            _w: std::marker::PhantomData<&'a T>,
        }
        let walls: Vec<WallOut<T>> = self
            .walls
            .iter()
            .map(|w| WallOut {
                id: w.id,
                parent_zero: w.parent_zero,
                k: w.k,
                label: w.label,
                points: w.trajectory.points.iter().map(|p| [p.z.re, p.z.im]).collect(),
                termination: w.trajectory.termination,
                saddle_partner: w.saddle_partner,
                _w: std::marker::PhantomData,
            })
            .collect();
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("theta", &self.theta)?;
        m.serialize_entry("walls", &walls)?;
        m.serialize_entry("saddle_free", &self.saddle_free)?;
        m.serialize_entry("branch_cuts", &self.branch_cuts)?;
        m.end()
    }
}

/// `√φ` on the branch-cut `+` sheet near a zero.  In the normal-form
/// coordinate `ξ = λ(z − b)`, `λ = |c|^{1/3} e^{−i a₀}`, wall `k = 0` runs
/// along the positive ξ-axis and the cut along the negative one; the `+`
/// sheet is `e^{iθ} λ √ξ` with the principal root.
fn cut_plus_sqrt<T: Real>(c: C<T>, zero: C<T>, a0: T, theta: T, z: C<T>) -> C<T> {
    let lambda = cis(-a0) * c.norm().cbrt();
    cis(theta) * lambda * (lambda * (z - zero)).sqrt()
}

/// Label a wall by comparing its positive sheet at the seed point with the
/// branch-cut sheet assignment of its zero.
pub fn label_wall<T: Real>(qd: &RationalQd<T>, zero: C<T>, theta: T, traj: &Trajectory<T>) -> Result<SheetLabel, QdError> {
    let (_, c, _) = qd.eval_d2(zero)?;
    let a0 = wall_angles(c, theta)[0];
    let seed = traj.start();
    let plus = cut_plus_sqrt(c, zero, a0, theta, seed.z);
    Ok(if (seed.sqrt_value * plus.conj()).re > T::zero() { SheetLabel::MinusPlus } else { SheetLabel::PlusMinus })
}

/// Build the spectral network at phase θ.
pub fn build<T: Real>(qd: &RationalQd<T>, theta: T, params: &IntegrationParams<T>) -> Result<SpectralNetwork<T>, NetworkError> {
    qd.require_complete_gmn()?;
    if qd.inventory().zero_at_infinity.is_some() {
        return Err(NetworkError::ZeroAtInfinity);
    }
    params.validate(qd)?;
    let zeros = qd.zeros().to_vec();
    let jobs: Vec<(usize, usize)> = (0..zeros.len()).flat_map(|i| (0..3).map(move |k| (i, k))).collect();
    let trajs: Vec<Result<Trajectory<T>, TraceError>> =
        jobs.par_iter().map(|&(i, k)| trace_wall(qd, i, k, theta, params)).collect();

    let r = params.zero_hit_radius;
    let mut walls = Vec::with_capacity(jobs.len());
    for (&(i, k), traj) in jobs.iter().zip(trajs) {
        let traj = traj?;
        let id = 3 * i + k;
        for (j, &d) in traj.min_zero_distance.iter().enumerate() {
            if j == i || traj.termination == Termination::ZeroHit(j) {
                continue;
            }
            if d < r + r {
                return Err(NetworkError::SaddleAmbiguity { wall: id, zero: j, distance: d.f64() });
            }
        }
        let saddle_partner = match traj.termination {
            Termination::ZeroHit(j) => {
                let b = zeros[j];
                let (_, cj, _) = qd.eval_d2(b)?;
                let dir = (traj.end().z - b).arg();
                let angles = wall_angles(cj, theta);
                let kk = (0..3)
                    .min_by(|&x, &y| {
                        let dx = wrap_pi(angles[x] - dir).abs();
                        let dy = wrap_pi(angles[y] - dir).abs();
                        dx.partial_cmp(&dy).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .unwrap_or(0);
                Some((j, 3 * j + kk))
            }
            _ => None,
        };
        let label = label_wall(qd, zeros[i], theta, &traj)?;
        let mut dense = vec![(zeros[i], traj.start().sqrt_value)];
        dense.extend(traj.dense(qd, T::cst(0.02), T::cst(0.05)));
        let line: Vec<C<T>> = dense.iter().map(|p| p.0).collect();
        let bbox = bounding_box(&line);
        walls.push(Wall { id, parent_zero: i, k, trajectory: traj, label, saddle_partner, dense, bbox });
    }
    let saddle_free = walls.iter().all(|w| w.saddle_partner.is_none());
    let branch_cuts = zeros
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let (_, c, _) = qd.eval_d2(b)?;
            Ok(BranchCut { zero: i, angle: wrap_2pi(wall_angles(c, theta)[0] + T::PI()) })
        })
        .collect::<Result<Vec<_>, QdError>>()?;
    Ok(SpectralNetwork { theta, walls, saddle_free, branch_cuts, zeros, params: *params })
}

/// The saddle-free phase nearest `theta0` on the grid `theta0 + j·dtheta`.
pub fn generic_phase<T: Real>(qd: &RationalQd<T>, theta0: T, params: &IntegrationParams<T>, dtheta: T) -> Result<T, NetworkError> {
    let cap = T::FRAC_PI_2();
    let mut j = 0usize;
    loop {
        let offset = dtheta * T::from_count(j);
        if offset > cap {
            return Err(NetworkError::NoSaddleFreePhaseFound);
        }
        let candidates: &[T] = if j == 0 { &[T::zero()] } else { &[offset, -offset] };
        for &o in candidates {
            let theta = theta0 + o;
            match build(qd, theta, params) {
                Ok(net) if net.saddle_free => return Ok(theta),
                Ok(_) | Err(NetworkError::SaddleAmbiguity { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        j += 1;
    }
}

/// A transversal intersection of a path with a wall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing<T> {
    pub wall: usize,
    /// Euclidean arclength along the path.
    pub s: T,
    /// `+1` when the vertical coordinate on the wall's positive sheet
    /// increases through the crossing.
    pub sign: i8,
    pub z: C<T>,
    /// Path segment index and parameter within it.
    pub segment: usize,
    pub t: T,
    /// `√φ` on the wall's positive sheet at the crossing.
    pub wall_sqrt: C<T>,
}

/// Minimum admissible sine of the crossing angle.
const MIN_CROSSING_SINE: f64 = 1e-3;

/// All crossings of `path` with the walls, ordered along the path.
pub fn crossings<T: Real>(net: &SpectralNetwork<T>, qd: &RationalQd<T>, path: &[C<T>]) -> Result<Vec<Crossing<T>>, NetworkError> {
    if path.len() < 2 {
        return Ok(Vec::new());
    }
    for (j, &b) in net.zeros.iter().enumerate() {
        if path.windows(2).any(|w| point_segment_distance(b, w[0], w[1]) <= net.params.zero_hit_radius) {
            return Err(NetworkError::PathThroughZero { zero: j });
        }
    }
    let endpoints = [path[0], *path.last().unwrap()];
    let rot = cis(-net.theta);
    let mut out = Vec::new();
    let mut s_acc = T::zero();
    let n_seg = path.len() - 1;
    for w in &net.walls {
        for &e in &endpoints {
            let tol = T::cst(1e-9) * (T::one() + e.norm());
            if point_polyline_distance(e, &w.polyline()) <= tol {
                return Err(NetworkError::EndpointOnWall { wall: w.id });
            }
        }
    }
    for (si, seg) in path.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let seg_len = (b - a).norm();
        let (lo_re, hi_re) = (a.re.min(b.re), a.re.max(b.re));
        let (lo_im, hi_im) = (a.im.min(b.im), a.im.max(b.im));
        let mut found: Vec<Crossing<T>> = Vec::new();
        for w in &net.walls {
            let (x0, y0, x1, y1) = w.bbox;
            if hi_re < x0 || lo_re > x1 || hi_im < y0 || lo_im > y1 {
                continue;
            }
            let nw = w.dense.len() - 1;
            for j in 0..nw {
                let (p0, p1) = (w.dense[j].0, w.dense[j + 1].0);
                if p0.re.max(p1.re) < lo_re || p0.re.min(p1.re) > hi_re || p0.im.max(p1.im) < lo_im || p0.im.min(p1.im) > hi_im {
                    continue;
                }
                let Some((t, u)) = segment_intersection(a, b, p0, p1) else { continue };
                // Half-open conventions avoid double counting at shared vertices.
                if (t >= T::one() && si + 1 < n_seg) || (u >= T::one() && j + 1 < nw) {
                    continue;
                }
                let r = b - a;
                let sdir = p1 - p0;
                let sine = (r.re * sdir.im - r.im * sdir.re).abs() / (r.norm() * sdir.norm());
                if sine < T::cst(MIN_CROSSING_SINE) {
                    return Err(NetworkError::TangentialCrossing { wall: w.id, angle: sine.asin().f64() });
                }
                let z = a + r * t;
                let reference = w.dense[j].1;
                let wall_sqrt = closest_root(qd.sqrt_principal(z)?, reference);
                let vertical = (rot * wall_sqrt * r).im;
                let sign = if vertical > T::zero() { 1 } else { -1 };
                found.push(Crossing { wall: w.id, s: s_acc + seg_len * t, sign, z, segment: si, t, wall_sqrt });
            }
        }
        found.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap_or(std::cmp::Ordering::Equal));
        out.extend(found);
        s_acc += seg_len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn toy() -> RationalQd<f64> {
        RationalQd::construct(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn toy_labels() {
        let q = toy();
        let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
        assert_eq!(net.walls.len(), 3);
        assert!(net.saddle_free);
        assert_eq!(net.walls[0].label, SheetLabel::MinusPlus);
        assert_eq!(net.walls[1].label, SheetLabel::PlusMinus);
        assert_eq!(net.walls[2].label, SheetLabel::PlusMinus);
    }

    #[test]
    fn circle_crossings() {
        let q = toy();
        let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
        let start = std::f64::consts::PI / 6.0;
        let circle: Vec<Complex64> = (0..=96)
            .map(|k| Complex64::from_polar(1.0, start + std::f64::consts::TAU * k as f64 / 96.0))
            .collect();
        let xs = crossings(&net, &q, &circle).unwrap();
        let ids: Vec<usize> = xs.iter().map(|x| x.wall).collect();
        assert_eq!(ids, vec![1, 2, 0]);
        assert!(xs.iter().all(|x| x.sign == xs[0].sign));
    }

    #[test]
    fn no_crossings_off_network() {
        let q = toy();
        let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
        let xs = crossings(&net, &q, &[Complex64::new(1.0, 1.0), Complex64::new(2.0, 1.0)]).unwrap();
        assert!(xs.is_empty());
    }

    #[test]
    fn endpoint_on_wall() {
        let q = toy();
        let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
        let r = crossings(&net, &q, &[Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)]);
        assert!(matches!(r, Err(NetworkError::EndpointOnWall { wall: 0 })));
    }
}
