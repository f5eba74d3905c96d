//! Path-groupoid chart of the base: a pair of base points straddling each
//! wall, short vertical arcs across the walls, connectors around each zero
//! and free paths between arbitrary base points.

use std::collections::BTreeMap;

use rand::Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::network::{crossings, NetworkError, SpectralNetwork};
use crate::qdiff::{sqrt_continue, QdError, RationalQd, SheetPoint};
use crate::scalar::{cis, wrap_2pi, Real, C};
use crate::trajectory::{trace, IntegrationParams, Termination, TraceError};

/// Attempts at drawing an admissible random free path.
const RANDOM_PATH_ATTEMPTS: usize = 64;

/// Errors raised while building or extending a chart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("clearance too small: {0}")]
    ClearanceTooSmall(String),
    #[error("wall {wall} is shorter than the truncation length")]
    WallTooShort { wall: usize },
    #[error("the network has a saddle; rotate to a generic phase first")]
    NotSaddleFree,
    #[error("unknown base point {0}")]
    UnknownBasePoint(usize),
    #[error("free path endpoints do not match its base points")]
    EndpointMismatch,
    #[error("cannot route a path through the outer region: {0}")]
    OuterPathFailed(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Qd(#[from] QdError),
}

/// Side of a wall a base point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseKind {
    Up,
    Down,
}

impl Serialize for BaseKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            BaseKind::Up => "u",
            BaseKind::Down => "d",
        })
    }
}

/// A base point next to a wall, with its ordered fibre basis given by the
/// wall's positive sheet continued along the short vertical arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePoint<T> {
    pub id: usize,
    pub wall: usize,
    pub kind: BaseKind,
    pub z: C<T>,
    /// `√φ` of the first (plus) lift.
    pub plus_sqrt: C<T>,
}

/// Kind of a generator arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcKind {
    ShortVertical { wall: usize },
    Hexagonal { zero: usize, leg: usize },
    FreePath,
}

/// An arc between base points.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorArc<T> {
    pub id: String,
    pub kind: ArcKind,
    pub polyline: Vec<C<T>>,
    pub source: usize,
    pub target: usize,
    /// Whether continuation along the arc carries the source's plus lift to
    /// the target's minus lift.
    pub swaps: bool,
}

/// The closed loop around one zero through its six base points.
#[derive(Clone, Debug, PartialEq)]
pub struct HexLoop<T> {
    pub zero: usize,
    /// Wall ids `(w₀, w₁, w₋₁)`.
    pub walls: [usize; 3],
    /// `d(w₀), u(w₀), d(w₁), u(w₁), d(w₋₁), u(w₋₁)`.
    pub point_ids: [usize; 6],
    /// `α(w₀), α(w₀,w₁), α(w₁), α(w₁,w₋₁), α(w₋₁), α(w₋₁,w₀)`.
    pub arc_ids: [String; 6],
    pub polyline: Vec<C<T>>,
}

impl<T: Real> HexLoop<T> {
    pub fn path(&self) -> GroupoidPath {
        GroupoidPath { steps: self.arc_ids.iter().map(|a| PathStep { arc: a.clone(), reversed: false }).collect() }
    }
}

/// One oriented arc of a groupoid word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub arc: String,
    pub reversed: bool,
}

/// A word of arcs, applied left to right.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct GroupoidPath {
    pub steps: Vec<PathStep>,
}

impl GroupoidPath {
    pub fn single(arc: &str) -> Self {
        GroupoidPath { steps: vec![PathStep { arc: arc.to_string(), reversed: false }] }
    }

    /// Parse `"a b~ c"` (a trailing `~` reverses an arc).
    pub fn parse(words: &[String]) -> Self {
        GroupoidPath {
            steps: words
                .iter()
                .map(|w| match w.strip_suffix('~') {
                    Some(a) => PathStep { arc: a.to_string(), reversed: true },
                    None => PathStep { arc: w.clone(), reversed: false },
                })
                .collect(),
        }
    }

    pub fn then(mut self, other: &GroupoidPath) -> Self {
        self.steps.extend(other.steps.iter().cloned());
        self
    }

    pub fn reversed(&self) -> Self {
        GroupoidPath {
            steps: self
                .steps
                .iter()
                .rev()
                .map(|s| PathStep { arc: s.arc.clone(), reversed: !s.reversed })
                .collect(),
        }
    }
}

/// Base points, generator arcs and hexagonal loops for a saddle-free
/// network.
#[derive(Clone, Debug)]
pub struct GroupoidChart<T> {
    pub theta: T,
    pub truncation: T,
    pub eta: T,
    /// Point at φ-distance `T` along each wall, with `√φ` on its positive sheet.
    pub b_points: Vec<(C<T>, C<T>)>,
    pub base_points: Vec<BasePoint<T>>,
    pub arcs: BTreeMap<String, GeneratorArc<T>>,
    pub hex_loops: Vec<HexLoop<T>>,
}

/// Id of the base point on the given side of a wall.
pub fn base_id(wall: usize, kind: BaseKind) -> usize {
    2 * wall + usize::from(kind == BaseKind::Up)
}

/// Id of the short vertical arc across a wall.
pub fn vertical_id(wall: usize) -> String {
    format!("v{wall}")
}

/// Id of the connector leg of a hexagon.
pub fn connector_id(zero: usize, leg: usize) -> String {
    format!("h{zero}.{leg}")
}

impl<T: Real> GroupoidChart<T> {
    pub fn arc(&self, id: &str) -> Option<&GeneratorArc<T>> {
        self.arcs.get(id)
    }

    /// Register an extra arc (typically a free path) with the chart.
    pub fn insert_arc(&mut self, arc: GeneratorArc<T>) {
        self.arcs.insert(arc.id.clone(), arc);
    }

    /// A random free path from `source` to `target` through up to three
    /// interior vertices drawn from the disc of the given radius, admissible
    /// for crossing detection and sheet continuation.
    pub fn random_free_path<R: Rng>(
        &self,
        qd: &RationalQd<T>,
        net: &SpectralNetwork<T>,
        id: &str,
        source: usize,
        target: usize,
        radius: T,
        rng: &mut R,
    ) -> Result<GeneratorArc<T>, ChartError> {
        let (s, t) = (self.base_point(source)?.z, self.base_point(target)?.z);
        for _ in 0..RANDOM_PATH_ATTEMPTS {
            let mut line = vec![s];
            for _ in 0..rng.gen_range(1..=3) {
                let r = radius * T::cst(rng.gen::<f64>().sqrt());
                line.push(cis(T::cst(rng.gen_range(0.0..std::f64::consts::TAU))) * r);
            }
            line.push(t);
            if crossings(net, qd, &line).is_err() {
                continue;
            }
            if let Ok(arc) = self.free_path(qd, id, line, source, target) {
                return Ok(arc);
            }
        }
        Err(ChartError::OuterPathFailed(format!("no admissible random path from {source} to {target}")))
    }

    pub fn base_point(&self, id: usize) -> Result<&BasePoint<T>, ChartError> {
        self.base_points.get(id).ok_or(ChartError::UnknownBasePoint(id))
    }

    /// Build a free-path arc between two base points.  The polyline must
    /// start and end at the base points.
    pub fn free_path(
        &self,
        qd: &RationalQd<T>,
        id: &str,
        polyline: Vec<C<T>>,
        source: usize,
        target: usize,
    ) -> Result<GeneratorArc<T>, ChartError> {
        let (s, t) = (self.base_point(source)?, self.base_point(target)?);
        let tol = T::cst(1e-12) * (T::one() + s.z.norm().max(t.z.norm()));
        if polyline.len() < 2 || (polyline[0] - s.z).norm() > tol || (*polyline.last().unwrap() - t.z).norm() > tol {
            return Err(ChartError::EndpointMismatch);
        }
        let swaps = lift_swaps(qd, &polyline, s, t)?;
        Ok(GeneratorArc { id: id.to_string(), kind: ArcKind::FreePath, polyline, source, target, swaps })
    }
}

/// Whether continuing the source's plus lift along `polyline` arrives at the
/// target's minus lift.
fn lift_swaps<T: Real>(qd: &RationalQd<T>, polyline: &[C<T>], s: &BasePoint<T>, t: &BasePoint<T>) -> Result<bool, QdError> {
    let start = SheetPoint { z: s.z, sheet: 1, sqrt_value: s.plus_sqrt };
    let (end, _) = sqrt_continue(qd, polyline, &start)?;
    Ok((end.sqrt_value - t.plus_sqrt).norm() > (end.sqrt_value + t.plus_sqrt).norm())
}

/// Counter-clockwise arc around `center` from `a` to `b`, interpolating the
/// radius linearly.
fn polar_arc<T: Real>(center: C<T>, a: C<T>, b: C<T>, n: usize) -> Vec<C<T>> {
    let (ra, rb) = ((a - center).norm(), (b - center).norm());
    let (pa, pb) = ((a - center).arg(), (b - center).arg());
    let sweep = wrap_2pi(pb - pa);
    let mut out = Vec::with_capacity(n + 1);
    out.push(a);
    for i in 1..n {
        let f = T::from_count(i) / T::from_count(n);
        out.push(center + cis(pa + sweep * f) * (ra + (rb - ra) * f));
    }
    out.push(b);
    out
}

/// Build the chart: base points at φ-distance `truncation` along each wall,
/// offset vertically by `±eta`.
pub fn build_chart<T: Real>(
    qd: &RationalQd<T>,
    net: &SpectralNetwork<T>,
    truncation: T,
    eta: T,
) -> Result<GroupoidChart<T>, ChartError> {
    if !net.saddle_free {
        return Err(ChartError::NotSaddleFree);
    }
    if !(eta > T::zero()) || eta * T::cst(4.0) >= truncation {
        return Err(ChartError::ClearanceTooSmall(format!("eta = {eta} must be positive and below T/4 = {}", truncation / T::cst(4.0))));
    }
    let params: IntegrationParams<T> = net.params.with_max_length(eta);
    let up_phase = net.theta + T::FRAC_PI_2();

    let mut b_points = Vec::new();
    let mut base_points = Vec::new();
    let mut arcs = BTreeMap::new();
    for w in &net.walls {
        let traj = &w.trajectory;
        let s = truncation - traj.offset_length;
        if s <= T::zero() || s >= traj.length() {
            return Err(ChartError::WallTooShort { wall: w.id });
        }
        let (b, sb) = traj.sample(qd, s);
        b_points.push((b, sb));
        let start = SheetPoint::near(qd, b, sb)?;
        let up = trace(qd, &start, 1, up_phase, &params)?;
        let down = trace(qd, &start, -1, up_phase, &params)?;
        if up.termination != Termination::MaxLength || down.termination != Termination::MaxLength {
            return Err(ChartError::ClearanceTooSmall(format!("vertical arc at wall {} left the chart", w.id)));
        }
        let up_line = up.dense_polyline(qd, T::cst(0.02), eta);
        // Leave out the wall point itself so the crossing falls strictly
        // inside a segment.
        let mut line: Vec<C<T>> = down.dense_polyline(qd, T::cst(0.02), eta).into_iter().rev().collect();
        line.pop();
        line.extend_from_slice(&up_line[1..]);
        let d = BasePoint { id: base_id(w.id, BaseKind::Down), wall: w.id, kind: BaseKind::Down, z: down.end().z, plus_sqrt: down.end().sqrt_value };
        let u = BasePoint { id: base_id(w.id, BaseKind::Up), wall: w.id, kind: BaseKind::Up, z: up.end().z, plus_sqrt: up.end().sqrt_value };
        base_points.push(d);
        base_points.push(u);
        let xs = crossings(net, qd, &line)?;
        if xs.len() != 1 || xs[0].wall != w.id || xs[0].sign != 1 {
            return Err(ChartError::ClearanceTooSmall(format!("short vertical at wall {} crosses {:?}", w.id, xs.iter().map(|x| (x.wall, x.sign)).collect::<Vec<_>>())));
        }
        let id = vertical_id(w.id);
        arcs.insert(id.clone(), GeneratorArc { id, kind: ArcKind::ShortVertical { wall: w.id }, polyline: line, source: d.id, target: u.id, swaps: false });
    }

    // Base points must sit clearly off the network.
    for bp in &base_points {
        let phi_dist = net.distance_to_network(bp.z) * bp.plus_sqrt.norm();
        if phi_dist <= eta * T::cst(0.5) {
            return Err(ChartError::ClearanceTooSmall(format!("base point {} is {phi_dist} from the network", bp.id)));
        }
    }

    let mut hex_loops = Vec::new();
    for (zi, &zero) in net.zeros.iter().enumerate() {
        let walls = [3 * zi, 3 * zi + 1, 3 * zi + 2];
        let mut polyline = Vec::new();
        let mut arc_ids: Vec<String> = Vec::new();
        for (m, &w) in walls.iter().enumerate() {
            let next = walls[(m + 1) % 3];
            let v = vertical_id(w);
            polyline.extend_from_slice(&arcs[&v].polyline);
            arc_ids.push(v);
            let (a, b) = (base_id(w, BaseKind::Up), base_id(next, BaseKind::Down));
            let line = polar_arc(zero, base_points[a].z, base_points[b].z, 48);
            let xs = crossings(net, qd, &line)?;
            if !xs.is_empty() {
                return Err(ChartError::ClearanceTooSmall(format!("connector around zero {zi} crosses wall {}", xs[0].wall)));
            }
            let leg = 2 * m + 1;
            let id = connector_id(zi, leg);
            let swaps = lift_swaps(qd, &line, &base_points[a], &base_points[b])?;
            polyline.extend_from_slice(&line[1..]);
            arcs.insert(id.clone(), GeneratorArc { id: id.clone(), kind: ArcKind::Hexagonal { zero: zi, leg }, polyline: line, source: a, target: b, swaps });
            arc_ids.push(id);
        }
        let point_ids = [0, 1, 2, 3, 4, 5].map(|i| base_id(walls[i / 2], if i % 2 == 0 { BaseKind::Down } else { BaseKind::Up }));
        hex_loops.push(HexLoop {
            zero: zi,
            walls,
            point_ids,
            arc_ids: arc_ids.try_into().expect("six legs"),
            polyline,
        });
    }
    Ok(GroupoidChart { theta: net.theta, truncation, eta, b_points, base_points, arcs, hex_loops })
}

/// Per base point, the ordered pair `(plus lift, minus lift)`.
pub fn lift_basepoints<T: Real>(qd: &RationalQd<T>, chart: &GroupoidChart<T>) -> Result<Vec<[SheetPoint<T>; 2]>, QdError> {
    chart
        .base_points
        .iter()
        .map(|bp| {
            let plus = SheetPoint::near(qd, bp.z, bp.plus_sqrt)?;
            Ok([plus, plus.flipped()])
        })
        .collect()
}

/// A path from base point `from` to base point `to` through the region
/// outside the truncated network: out along the horizontal trajectory
/// through `from`, counter-clockwise around a large circle, and in along the
/// horizontal trajectory through `to`.
pub fn outer_path<T: Real>(
    qd: &RationalQd<T>,
    net: &SpectralNetwork<T>,
    chart: &GroupoidChart<T>,
    from: usize,
    to: usize,
) -> Result<Vec<C<T>>, ChartError> {
    let reach = net.params.with_max_length(net.params.max_length * T::cst(2.0) + chart.truncation);
    let leg = |id: usize| -> Result<Vec<C<T>>, ChartError> {
        let bp = chart.base_point(id)?;
        let start = SheetPoint::near(qd, bp.z, bp.plus_sqrt)?;
        let t = trace(qd, &start, 1, net.theta, &reach)?;
        match t.termination {
            Termination::Escape | Termination::MaxLength => Ok(t.dense_polyline(qd, T::cst(0.05), T::cst(0.5))),
            other => Err(ChartError::OuterPathFailed(format!("horizontal leg from base point {id} ended with {other}"))),
        }
    };
    let out = leg(from)?;
    let back = leg(to)?;
    let (e1, e2) = (*out.last().unwrap(), *back.last().unwrap());
    let wall_reach = net
        .walls
        .iter()
        .flat_map(|w| w.dense.iter().map(|p| p.0.norm()))
        .fold(T::zero(), T::max);
    let radius = e1.norm().max(e2.norm()).max(wall_reach) * T::cst(1.05);
    let (a1, a2) = (e1.arg(), e2.arg());
    let sweep = wrap_2pi(a2 - a1);
    let n = (sweep / T::cst(0.02)).ceil().to_usize().unwrap_or(1).max(2);
    let mut path = out;
    for i in 0..=n {
        let a = a1 + sweep * T::from_count(i) / T::from_count(n);
        path.push(cis(a) * radius);
    }
    path.extend(back.into_iter().rev());
    Ok(path)
}

/// Free paths and the word for a loop around all zeros: the walls are
/// visited in counter-clockwise order of their far ends, crossing each by
/// its short vertical and joining consecutive ones through the outer region.
pub fn outer_loop<T: Real>(
    qd: &RationalQd<T>,
    net: &SpectralNetwork<T>,
    chart: &GroupoidChart<T>,
) -> Result<(Vec<GeneratorArc<T>>, GroupoidPath), ChartError> {
    let mut order: Vec<usize> = (0..net.walls.len()).collect();
    order.sort_by(|&a, &b| {
        let ea = net.walls[a].dense.last().unwrap().0.arg();
        let eb = net.walls[b].dense.last().unwrap().0.arg();
        ea.partial_cmp(&eb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut free = Vec::new();
    let mut steps = Vec::new();
    for (n, &w) in order.iter().enumerate() {
        let next = order[(n + 1) % order.len()];
        let (a, b) = (base_id(w, BaseKind::Up), base_id(next, BaseKind::Down));
        let line = outer_path(qd, net, chart, a, b)?;
        let xs = crossings(net, qd, &line)?;
        if !xs.is_empty() {
            return Err(ChartError::OuterPathFailed(format!("outer path after wall {w} crosses wall {}", xs[0].wall)));
        }
        let id = format!("o{w}");
        free.push(chart.free_path(qd, &id, line, a, b)?);
        steps.push(PathStep { arc: vertical_id(w), reversed: false });
        steps.push(PathStep { arc: id, reversed: false });
    }
    Ok((free, GroupoidPath { steps }))
}

impl<T: Real> Serialize for GroupoidChart<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Bp<T> {
            id: usize,
            wall: usize,
            kind: BaseKind,
            z: [T; 2],
        }
        #[derive(Serialize)]
        struct Hex<T> {
            zero: usize,
            point_ids: [usize; 6],
            arc_ids: Vec<String>,
            polyline: Vec<[T; 2]>,
        }
        let bps: Vec<Bp<T>> = self.base_points.iter().map(|b| Bp { id: b.id, wall: b.wall, kind: b.kind, z: [b.z.re, b.z.im] }).collect();
        let hex: Vec<Hex<T>> = self
            .hex_loops
            .iter()
            .map(|h| Hex {
                zero: h.zero,
                point_ids: h.point_ids,
                arc_ids: h.arc_ids.to_vec(),
                polyline: h.polyline.iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect();
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("base_points", &bps)?;
        m.serialize_entry("hex_loops", &hex)?;
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn path_words() {
        let p = GroupoidPath::parse(&["a".into(), "b~".into()]);
        assert_eq!(p.steps[1], PathStep { arc: "b".into(), reversed: true });
        let r = p.reversed();
        assert_eq!(r.steps[0], PathStep { arc: "b".into(), reversed: false });
        assert_eq!(r.steps[1], PathStep { arc: "a".into(), reversed: true });
    }

    #[test]
    fn arcs_turn_counter_clockwise() {
        let a = polar_arc(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), 8);
        assert!(a[4].im > 0.0 && a[4].re > 0.0);
        assert!((a[4].norm() - 1.5).abs() < 1e-12);
    }
}
