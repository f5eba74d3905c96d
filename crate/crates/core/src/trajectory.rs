//! Phase-θ trajectories of a quadratic differential.
//!
//! A trajectory solves `dz/ds = ±e^{iθ}/√φ(z)` in φ-arclength `s`, so that
//! `√φ dz` has constant phase `θ` and unit length along it.  Walls are the
//! trajectories leaving a simple zero; flow lines are the same curves
//! obtained from the holomorphic gradient formulation.

use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ode::{integrate, DenseStep, Drive, DriveError, Stop};
use crate::qdiff::{wall_angles, QdError, RationalQd, SheetPoint};
use crate::scalar::{cis, closest_root, Real, C};

/// Numerical parameters for tracing.  Lengths are φ-arclengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationParams<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub max_length: T,
    pub escape_radius: T,
    pub zero_hit_radius: T,
    pub pole_hit_radius: T,
    pub seed_offset: T,
}

impl<T: Real> Default for IntegrationParams<T> {
    fn default() -> Self {
        IntegrationParams {
            rel_tol: T::cst(1e-9),
            abs_tol: T::cst(1e-12),
            max_step: T::cst(0.5),
            max_length: T::cst(50.0),
            escape_radius: T::cst(100.0),
            zero_hit_radius: T::cst(1e-4),
            pole_hit_radius: T::cst(1e-3),
            seed_offset: T::cst(1e-3),
        }
    }
}

impl<T: Real> IntegrationParams<T> {
    /// Check positivity and the radius ordering against `qd`.
    pub fn validate(&self, qd: &RationalQd<T>) -> Result<(), TraceError> {
        let all = [
            self.rel_tol,
            self.abs_tol,
            self.max_step,
            self.max_length,
            self.escape_radius,
            self.zero_hit_radius,
            self.pole_hit_radius,
            self.seed_offset,
        ];
        if all.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(TraceError::InvalidParams("all parameters must be positive and finite".into()));
        }
        if self.zero_hit_radius >= self.seed_offset {
            return Err(TraceError::InvalidParams("zero_hit_radius must be below seed_offset".into()));
        }
        if self.seed_offset * T::cst(4.0) >= qd.min_separation() {
            return Err(TraceError::InvalidParams(
                "seed_offset must be below a quarter of the critical-point separation".into(),
            ));
        }
        Ok(())
    }

    /// The same parameters with a different length budget.
    pub fn with_max_length(&self, max_length: T) -> Self {
        IntegrationParams { max_length, ..*self }
    }
}

/// Errors raised while tracing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("step size underflow at s = {s} near z = {z} (unresolved stiffness)")]
    StepUnderflow { s: f64, z: String },
    #[error("start point lies within the hit radius of a critical point")]
    StartTooClose,
    #[error("lift pair has equal sheets")]
    DegenerateLiftPair,
    #[error("invalid integration parameters: {0}")]
    InvalidParams(String),
    #[error("no zero with index {0}")]
    NoSuchZero(usize),
    #[error(transparent)]
    Qd(#[from] QdError),
}

impl TraceError {
    fn from_drive(e: DriveError) -> Self {
        match e {
            DriveError::StepUnderflow { t, z } => TraceError::StepUnderflow { s: t, z },
        }
    }
}

/// Why a trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Escape,
    ZeroHit(usize),
    PoleCapture(usize),
    MaxLength,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Escape => write!(f, "Escape"),
            Termination::ZeroHit(j) => write!(f, "ZeroHit({j})"),
            Termination::PoleCapture(j) => write!(f, "PoleCapture({j})"),
            Termination::MaxLength => write!(f, "MaxLength"),
        }
    }
}

impl Serialize for Termination {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl From<Stop> for Termination {
    fn from(s: Stop) -> Self {
        match s {
            Stop::ZeroHit(j) => Termination::ZeroHit(j),
            Stop::PoleCapture(j) => Termination::PoleCapture(j),
            Stop::Escape => Termination::Escape,
            Stop::MaxParam => Termination::MaxLength,
        }
    }
}

/// A vertex of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub z: C<T>,
    pub s: T,
    /// Sheet relative to the principal square root at `z`.
    pub sheet: i8,
    pub sqrt_value: C<T>,
    /// `∫√φ dz` from the start of the trajectory.
    pub integral: C<T>,
}

/// Maximum deviations from the defining identities, sampled on the dense
/// output of every step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `max ||√φ dz/ds| − 1|`.
    pub unit_speed: f64,
    /// `max |Im(e^{−iθ} √φ dz/ds)|`.
    pub gmn: f64,
    /// `max |∫√φ dz − dir·e^{iθ} s| / (1 + s)`.
    pub integral: f64,
}

/// A traced trajectory with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub points: Vec<TrajectoryPoint<T>>,
    pub phase: T,
    pub direction: i8,
    pub termination: Termination,
    /// φ-length between the zero a wall emanates from and its first point.
    pub offset_length: T,
    pub origin_zero: Option<usize>,
    /// Minimum sampled distance to each finite zero.
    pub min_zero_distance: Vec<T>,
    steps: Vec<DenseStep<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Total traced φ-length.
    pub fn length(&self) -> T {
        self.points.last().map(|p| p.s).unwrap_or_else(T::zero)
    }

    pub fn start(&self) -> &TrajectoryPoint<T> {
        &self.points[0]
    }

    pub fn end(&self) -> &TrajectoryPoint<T> {
        self.points.last().expect("trajectory has a start point")
    }

    /// Vertices only.
    pub fn polyline(&self) -> Vec<C<T>> {
        self.points.iter().map(|p| p.z).collect()
    }

    /// Point and tracked `√φ` at arclength `s` (clamped to the traced range).
    pub fn sample(&self, qd: &RationalQd<T>, s: T) -> (C<T>, C<T>) {
        if self.steps.is_empty() {
            let p = self.start();
            return (p.z, p.sqrt_value);
        }
        let s = s.max(T::zero()).min(self.length());
        let idx = self
            .steps
            .partition_point(|st| st.t_end() < s)
            .min(self.steps.len() - 1);
        let st = &self.steps[idx];
        let sigma = ((s - st.t0) / st.h).max(T::zero()).min(st.frac);
        let z = st.eval(sigma);
        let v = qd.sqrt_principal(z).map(|r| closest_root(r, st.sqrt0)).unwrap_or(st.sqrt0);
        (z, v)
    }

    /// Densified polyline whose chords are at most `rel_chord` times the
    /// local distance to the critical set (and at most `max_chord`), each
    /// vertex carrying the tracked `√φ`.
    pub fn dense(&self, qd: &RationalQd<T>, rel_chord: T, max_chord: T) -> Vec<(C<T>, C<T>)> {
        let mut out = vec![(self.start().z, self.start().sqrt_value)];
        for st in &self.steps {
            let z0 = st.eval(T::zero());
            let z1 = st.eval(st.frac);
            let d = qd.critical_distance(z0).min(qd.critical_distance(z1));
            let chord = (rel_chord * d).min(max_chord);
            let n = ((z1 - z0).norm() * T::cst(1.5) / chord).ceil().max(T::one()).min(T::cst(4096.0));
            let n = n.to_usize().unwrap_or(1);
            let mut s = st.sqrt0;
            for i in 1..=n {
                let sigma = st.frac * T::from_count(i) / T::from_count(n);
                let z = st.eval(sigma);
                s = qd.sqrt_principal(z).map(|r| closest_root(r, s)).unwrap_or(s);
                out.push((z, s));
            }
        }
        out
    }

    /// Densified polyline (positions only); see [`Trajectory::dense`].
    pub fn dense_polyline(&self, qd: &RationalQd<T>, rel_chord: T, max_chord: T) -> Vec<C<T>> {
        self.dense(qd, rel_chord, max_chord).into_iter().map(|p| p.0).collect()
    }

    /// Unit-speed, GMN and integral residuals on the dense output.
    pub fn residuals(&self, qd: &RationalQd<T>) -> Residuals {
        let rot = cis(-self.phase);
        let dir = if self.direction >= 0 { T::one() } else { -T::one() };
        let mut r = Residuals { unit_speed: 0.0, gmn: 0.0, integral: 0.0 };
        for st in &self.steps {
            for sg in [T::cst(0.25), T::cst(0.5), T::cst(0.75)] {
                let sigma = sg * st.frac;
                let z = st.eval(sigma);
                let Ok(root) = qd.sqrt_principal(z) else { continue };
                let v = closest_root(root, st.sqrt0) * st.deriv(sigma);
                r.unit_speed = r.unit_speed.max((v.norm() - T::one()).abs().f64());
                r.gmn = r.gmn.max((rot * v).im.abs().f64());
            }
        }
        for p in &self.points {
            let expect = cis(self.phase) * (dir * p.s);
            r.integral = r.integral.max(((p.integral - expect).norm() / (T::one() + p.s)).f64());
        }
        r
    }
}

impl<T: Real> Serialize for Trajectory<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(6))?;
        let pts: Vec<[T; 2]> = self.points.iter().map(|p| [p.z.re, p.z.im]).collect();
        m.serialize_entry("points", &pts)?;
        let ss: Vec<T> = self.points.iter().map(|p| p.s).collect();
        m.serialize_entry("s", &ss)?;
        let sh: Vec<i8> = self.points.iter().map(|p| p.sheet).collect();
        m.serialize_entry("sheet", &sh)?;
        m.serialize_entry("termination", &self.termination)?;
        let i = self.end().integral;
        m.serialize_entry("integral", &[i.re, i.im])?;
        m.serialize_entry("phase", &self.phase)?;
        m.end()
    }
}

fn drive<T: Real>(params: &IntegrationParams<T>, t_max: T, max_step: T) -> Drive<T> {
    Drive {
        t_max,
        max_step,
        rel_tol: params.rel_tol,
        abs_tol: params.abs_tol,
        escape_radius: params.escape_radius,
        zero_radius: params.zero_hit_radius,
        pole_radius: params.pole_hit_radius,
        event_tol: T::cst(1e-10),
    }
}

fn check_start<T: Real>(qd: &RationalQd<T>, z: C<T>, params: &IntegrationParams<T>) -> Result<(), TraceError> {
    if qd.zeros().iter().any(|b| (z - *b).norm() <= params.zero_hit_radius)
        || qd.inventory().finite_poles.iter().any(|(p, _)| (z - *p).norm() <= params.pole_hit_radius)
    {
        return Err(TraceError::StartTooClose);
    }
    Ok(())
}

/// Gauss–Legendre 5-point nodes/weights on [0, 1].
const GL5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332_0, 0.118_463_442_528_094_5),
];

/// Trace the phase-θ trajectory from `start` in direction `direction_sign`.
pub fn trace<T: Real>(
    qd: &RationalQd<T>,
    start: &SheetPoint<T>,
    direction_sign: i8,
    theta: T,
    params: &IntegrationParams<T>,
) -> Result<Trajectory<T>, TraceError> {
    check_start(qd, start.z, params)?;
    let dir = if direction_sign >= 0 { T::one() } else { -T::one() };
    let rot = cis(theta) * dir;
    let cfg = drive(params, params.max_length, params.max_step);
    let run = integrate(qd, start.z, start.sqrt_value, |_, s| rot / s, &cfg).map_err(TraceError::from_drive)?;

    let mut points = Vec::with_capacity(run.steps.len() + 1);
    let mut integral = C::new(T::zero(), T::zero());
    points.push(TrajectoryPoint { z: start.z, s: T::zero(), sheet: start.sheet, sqrt_value: start.sqrt_value, integral });
    for st in &run.steps {
        // ∫√φ dz over the kept part of the step, on the dense output.
        let mut s = st.sqrt0;
        let mut acc = C::new(T::zero(), T::zero());
        for &(x, w) in &GL5 {
            let sigma = T::cst(x) * st.frac;
            let z = st.eval(sigma);
            s = qd.sqrt_principal(z).map(|r| closest_root(r, s)).unwrap_or(s);
            acc += s * st.deriv_sigma(sigma) * (T::cst(w) * st.frac);
        }
        integral += acc;
        let z = st.eval(st.frac);
        let v = qd.sqrt_principal(z).map(|r| closest_root(r, s)).unwrap_or(s);
        let sp = SheetPoint::near(qd, z, v)?;
        points.push(TrajectoryPoint { z, s: st.t_end(), sheet: sp.sheet, sqrt_value: v, integral });
    }
    // Guard against a zero-length final fragment.
    dedup_points(&mut points);
    Ok(Trajectory {
        points,
        phase: theta,
        direction: if direction_sign >= 0 { 1 } else { -1 },
        termination: run.stop.into(),
        offset_length: T::zero(),
        origin_zero: None,
        min_zero_distance: run.min_zero_dist,
        steps: run.steps,
    })
}

fn dedup_points<T: Real>(points: &mut Vec<TrajectoryPoint<T>>) {
    let mut i = 1;
    while i < points.len() {
        if points[i].s <= points[i - 1].s {
            points.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Seed point for wall `k` of zero `b` at phase θ: the point at distance
/// ≈ `seed_offset` along the asymptotic direction, corrected with the
/// next term of the local series, together with its φ-distance to `b`.
pub fn wall_seed<T: Real>(
    qd: &RationalQd<T>,
    zero: C<T>,
    k: usize,
    theta: T,
    seed_offset: T,
) -> Result<(SheetPoint<T>, T), TraceError> {
    let (_, c, dd) = qd.eval_d2(zero)?;
    let d = dd * T::cst(0.5);
    let sc = c.sqrt();
    let angle = wall_angles(c, theta)[k];
    let two_thirds = T::cst(2.0 / 3.0);
    let ratio = d / (c * T::cst(5.0));
    let w = |v: C<T>| sc * (v * v * v * two_thirds + v * v * v * v * v * ratio);
    let dw = |v: C<T>| sc * (v * v * T::cst(2.0) + v * v * v * v * ratio * T::cst(5.0));
    let v0 = cis(angle * T::cst(0.5)) * seed_offset.sqrt();
    let target = sc * v0 * v0 * v0 * two_thirds;
    let mut v = v0;
    for _ in 0..8 {
        let step = (w(v) - target) / dw(v);
        v -= step;
        if step.norm() <= T::epsilon() * v.norm() {
            break;
        }
    }
    let z = zero + v * v;
    let model = sc * v * (C::new(T::one(), T::zero()) + d / (c * T::cst(2.0)) * v * v);
    // Orient so that the outward integral W(z) − W(b) is real-positive
    // after rotating by e^{−iθ}.
    let sign = if (cis(-theta) * target).re >= T::zero() { T::one() } else { -T::one() };
    let sp = SheetPoint::near(qd, z, model * sign)?;
    Ok((sp, target.norm()))
}

/// Trace wall `k` of zero `zero_index` at phase θ.
pub fn trace_wall<T: Real>(
    qd: &RationalQd<T>,
    zero_index: usize,
    k: usize,
    theta: T,
    params: &IntegrationParams<T>,
) -> Result<Trajectory<T>, TraceError> {
    let zero = *qd.zeros().get(zero_index).ok_or(TraceError::NoSuchZero(zero_index))?;
    let (seed, offset) = wall_seed(qd, zero, k % 3, theta, params.seed_offset)?;
    let mut t = trace(qd, &seed, 1, theta, params)?;
    t.offset_length = offset;
    t.origin_zero = Some(zero_index);
    Ok(t)
}

/// Maximum chord between consecutive flow-line samples.
const FLOWLINE_CHORD: f64 = 5e-3;

/// Result of a flow-line integration.
#[derive(Clone, Debug)]
pub struct Flowline<T> {
    pub points: Vec<C<T>>,
    pub termination: Termination,
}

/// Integrate the gradient flow `dz/dt = −e^{iθ} conj(√φ₁ − √φ₂)/|φ|` from
/// `start`, where `√φ₁, √φ₂` are the lifts named by `lift_pair` (relative to
/// the principal root at `start`).  The flow runs until `max_length` of
/// φ-arclength (φ-speed is identically 2 along it) or an event.
pub fn flowline<T: Real>(
    qd: &RationalQd<T>,
    start: C<T>,
    lift_pair: (i8, i8),
    theta: T,
    params: &IntegrationParams<T>,
) -> Result<Flowline<T>, TraceError> {
    if lift_pair.0.signum() == lift_pair.1.signum() {
        return Err(TraceError::DegenerateLiftPair);
    }
    check_start(qd, start, params)?;
    let diff = T::from_f64(f64::from(lift_pair.0.signum() - lift_pair.1.signum())).unwrap();
    let rot = -cis(theta);
    let two = T::cst(2.0);
    let cfg = drive(params, params.max_length / two, params.max_step / two);
    let s0 = qd.sqrt_principal(start)?;
    let run = integrate(
        qd,
        start,
        s0,
        |_, s| rot * (s * diff).conj() / s.norm_sqr(),
        &cfg,
    )
    .map_err(TraceError::from_drive)?;
    let mut points = vec![start];
    for st in &run.steps {
        // Keep chords short enough that the polyline tracks the curve.
        let chord = (st.eval(st.frac) - st.eval(T::zero())).norm();
        let n = (chord / T::cst(FLOWLINE_CHORD)).ceil().to_usize().unwrap_or(4).max(4);
        for i in 1..=n {
            points.push(st.eval(st.frac * T::from_count(i) / T::from_count(n)));
        }
    }
    Ok(Flowline { points, termination: run.stop.into() })
}

/// The two halves of the maximal phase-θ trajectory through `z`, on the
/// principal sheet.
pub fn horizontal_through<T: Real>(
    qd: &RationalQd<T>,
    z: C<T>,
    theta: T,
    params: &IntegrationParams<T>,
) -> Result<(Trajectory<T>, Trajectory<T>), TraceError> {
    let sp = SheetPoint::on_sheet(qd, z, 1)?;
    Ok((trace(qd, &sp, 1, theta, params)?, trace(qd, &sp, -1, theta, params)?))
}
