//! Non-abelianization: almost-flat rank-1 local systems on the spectral
//! cover, given as values on lifted generator arcs, are pushed forward to
//! rank-2 transports on the base, corrected by unipotent wall factors.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::groupoid::{connector_id, vertical_id, ArcKind, ChartError, GeneratorArc, GroupoidChart, GroupoidPath};
use crate::mat2::Mat2;
use crate::network::{crossings, NetworkError, SpectralNetwork};
use crate::qdiff::{sqrt_continue, QdError, RationalQd, SheetPoint};
use crate::scalar::{c, cis, Field, Real, C};

/// Tolerance for the almost-flatness residual.
pub const FLATNESS_TOL: f64 = 1e-10;

/// Errors raised by non-abelianization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonabError {
    #[error("local system has no value on {arc}:{lift}")]
    MissingGenerator { arc: String, lift: Lift },
    #[error("local system value on {arc}:{lift} is zero")]
    ZeroValue { arc: String, lift: Lift },
    #[error("unknown arc {0}")]
    UnknownArc(String),
    #[error("path is empty")]
    EmptyPath,
    #[error("step {index} of the path does not start where the previous one ends")]
    PathNotComposable { index: usize },
    #[error("transport along {arc} is singular")]
    SingularTransport { arc: String },
    #[error("no wall factor for wall {0}")]
    MissingWallFactor(usize),
    #[error("hexagon around zero {zero} has an unexpected lift-swap pattern")]
    UnexpectedSwapPattern { zero: usize },
    #[error("monodromy determinant {det} differs from the abelian holonomy product {expected}")]
    DeterminantMismatch { det: f64, expected: f64 },
    #[error("path does not lift: {0}")]
    UnliftablePath(QdError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// One of the two lifts of an arc, named by the basis element of its
/// source it starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lift {
    Plus,
    Minus,
}

impl Lift {
    pub fn other(self) -> Lift {
        match self {
            Lift::Plus => Lift::Minus,
            Lift::Minus => Lift::Plus,
        }
    }

    /// The lift reached after an arc that may swap lifts.
    pub fn after(self, swaps: bool) -> Lift {
        if swaps {
            self.other()
        } else {
            self
        }
    }
}

impl fmt::Display for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lift::Plus => "+",
            Lift::Minus => "-",
        })
    }
}

/// A rank-1 local system on the spectral cover, given by its holonomy along
/// each lift of each generator arc.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LocalSystemCochain<S> {
    pub values: BTreeMap<(String, Lift), S>,
}

impl<S: Field> LocalSystemCochain<S> {
    pub fn set(&mut self, arc: &str, lift: Lift, v: S) {
        self.values.insert((arc.to_string(), lift), v);
    }

    /// Value on a lift; free paths default to the trivial connection.
    pub fn value(&self, arc: &GeneratorArc<impl Real>, lift: Lift) -> Result<S, NonabError> {
        match self.values.get(&(arc.id.clone(), lift)) {
            Some(v) if v.is_zero() => Err(NonabError::ZeroValue { arc: arc.id.clone(), lift }),
            Some(v) => Ok(v.clone()),
            None if arc.kind == ArcKind::FreePath => Ok(S::one()),
            None => Err(NonabError::MissingGenerator { arc: arc.id.clone(), lift }),
        }
    }

    fn get(&self, arc: &str, lift: Lift) -> Result<S, NonabError> {
        match self.values.get(&(arc.to_string(), lift)) {
            Some(v) if v.is_zero() => Err(NonabError::ZeroValue { arc: arc.to_string(), lift }),
            Some(v) => Ok(v.clone()),
            None => Err(NonabError::MissingGenerator { arc: arc.to_string(), lift }),
        }
    }

    /// Both lifts of every chart arc set to one, then one connector lift
    /// per zero set to −1 so every hexagon has holonomy −1.
    pub fn trivial_with_sign<T: Real>(chart: &GroupoidChart<T>) -> Self {
        let mut l = LocalSystemCochain { values: BTreeMap::new() };
        for arc in chart.arcs.values().filter(|a| a.kind != ArcKind::FreePath) {
            l.set(&arc.id, Lift::Plus, S::one());
            l.set(&arc.id, Lift::Minus, S::one());
        }
        for hex in &chart.hex_loops {
            l.set(&connector_id(hex.zero, 1), Lift::Plus, -S::one());
        }
        l
    }

    /// Rescale the first connector lift of every hexagon so that its
    /// holonomy is exactly −1.
    pub fn enforce_flatness<T: Real>(&mut self, chart: &GroupoidChart<T>) -> Result<(), NonabError> {
        for hex in &chart.hex_loops {
            let p = hex_product(self, &hex.arc_ids)?;
            let key = (connector_id(hex.zero, 1), Lift::Plus);
            let v = self.values[&key].clone();
            self.values.insert(key, -(v / p));
        }
        Ok(())
    }

}

impl<T: Real> LocalSystemCochain<C<T>> {
    /// Random values of modulus in `[1/2, 2]` on every chart arc, made
    /// almost-flat by rescaling one connector lift per zero.
    pub fn random<R: Rng>(chart: &GroupoidChart<T>, rng: &mut R) -> Self {
        let mut l = LocalSystemCochain { values: BTreeMap::new() };
        for arc in chart.arcs.values().filter(|a| a.kind != ArcKind::FreePath) {
            for lift in [Lift::Plus, Lift::Minus] {
                l.set(&arc.id, lift, random_unit_scale(rng));
            }
        }
        l.enforce_flatness(chart).expect("all hexagon values present");
        l
    }
}

/// Random nonzero complex number of modulus in `[1/2, 2]`.
pub fn random_unit_scale<T: Real, R: Rng>(rng: &mut R) -> C<T> {
    let r = 2f64.powf(rng.gen_range(-1.0..=1.0));
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    cis(T::cst(a)) * T::cst(r)
}

fn hex_product<S: Field>(l: &LocalSystemCochain<S>, arcs: &[String; 6]) -> Result<S, NonabError> {
    let mut p = S::one();
    for a in arcs {
        p = p * l.get(a, Lift::Plus)? * l.get(a, Lift::Minus)?;
    }
    Ok(p)
}

impl<T: Real> Serialize for LocalSystemCochain<C<T>> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        struct Values<'a, T>(&'a BTreeMap<(String, Lift), C<T>>);
        impl<T: Real> Serialize for Values<'_, T> {
            fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for ((arc, lift), v) in self.0 {
                    m.serialize_entry(&format!("{arc}:{lift}"), &[v.re, v.im])?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(1))?;
        m.serialize_entry("values", &Values(&self.values))?;
        m.end()
    }
}

impl<'de, T: Real> Deserialize<'de> for LocalSystemCochain<C<T>> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw<T> {
            values: BTreeMap<String, [T; 2]>,
        }
        let raw: Raw<T> = Raw::deserialize(d)?;
        let mut values = BTreeMap::new();
        for (k, [re, im]) in raw.values {
            let (arc, lift) = match k.rsplit_once(':') {
                Some((a, "+")) => (a, Lift::Plus),
                Some((a, "-")) => (a, Lift::Minus),
                _ => return Err(de::Error::custom(format!("key {k:?} is not of the form <arc>:+ or <arc>:-"))),
            };
            values.insert((arc.to_string(), lift), c(re, im));
        }
        Ok(LocalSystemCochain { values })
    }
}

/// Per-zero almost-flatness residuals `|hex holonomy + 1|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub residuals: Vec<f64>,
    pub passed: bool,
}

/// Check that the cochain covers every hexagon leg with nonzero values and
/// that the holonomy around each ramification point is −1.
pub fn validate<S: Field, T: Real>(l: &LocalSystemCochain<S>, chart: &GroupoidChart<T>) -> Result<FlatnessReport, NonabError> {
    let mut residuals = Vec::with_capacity(chart.hex_loops.len());
    for hex in &chart.hex_loops {
        for (m, id) in hex.arc_ids.iter().enumerate() {
            let arc = chart.arc(id).ok_or_else(|| NonabError::UnknownArc(id.clone()))?;
            // Verticals keep the ordering of the basis, connectors reverse it.
            if arc.swaps != (m % 2 == 1) {
                return Err(NonabError::UnexpectedSwapPattern { zero: hex.zero });
            }
        }
        let p = hex_product(l, &hex.arc_ids)?;
        residuals.push((p + S::one()).modulus());
    }
    let passed = residuals.iter().all(|&r| r < FLATNESS_TOL);
    Ok(FlatnessReport { residuals, passed })
}

/// The unipotent factor of a wall.
#[derive(Clone, Debug, PartialEq)]
pub struct WallFactor<S> {
    pub wall: usize,
    pub mu: S,
}

impl<T: Real> Serialize for WallFactor<C<T>> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("wall", &self.wall)?;
        m.serialize_entry("mu", &[self.mu.re, self.mu.im])?;
        m.end()
    }
}

/// Values of one hexagon: connectors `A = (w₀,w₁)`, `B = (w₁,w₋₁)`,
/// `C = (w₋₁,w₀)` and verticals `s₀, s₁, s₋₁`, each as `[Φ⁺, Φ⁻]`.
struct HexValues<S> {
    conn: [[S; 2]; 3],
    vert: [[S; 2]; 3],
}

fn hex_values<S: Field, T: Real>(l: &LocalSystemCochain<S>, chart: &GroupoidChart<T>, zero: usize) -> Result<HexValues<S>, NonabError> {
    let pair = |id: String| -> Result<[S; 2], NonabError> { Ok([l.get(&id, Lift::Plus)?, l.get(&id, Lift::Minus)?]) };
    let walls = chart.hex_loops[zero].walls;
    Ok(HexValues {
        conn: [pair(connector_id(zero, 1))?, pair(connector_id(zero, 3))?, pair(connector_id(zero, 5))?],
        vert: [pair(vertical_id(walls[0]))?, pair(vertical_id(walls[1]))?, pair(vertical_id(walls[2]))?],
    })
}

/// Wall factors `μ(w₀), μ(w₁), μ(w₋₁)` of the walls of one zero, as the
/// closed-form products of transport coefficients that make the hexagon
/// transport trivial.
pub fn mu_of_wall<S: Field, T: Real>(l: &LocalSystemCochain<S>, chart: &GroupoidChart<T>, zero: usize) -> Result<[WallFactor<S>; 3], NonabError> {
    let h = hex_values(l, chart, zero)?;
    let (p, m) = (0, 1);
    let [a, b, cc] = &h.conn;
    let [s0, s1, s2] = &h.vert;
    let walls = chart.hex_loops[zero].walls;
    let mu0 = -(a[m].clone() * b[p].clone() * cc[m].clone() * s0[p].clone() * s1[p].clone() * s2[m].clone());
    let mu1 = -(a[m].clone() * b[m].clone() * cc[p].clone() * s0[m].clone() * s1[p].clone() * s2[p].clone());
    let mu2 = -(a[p].clone() * b[m].clone() * cc[m].clone() * s0[p].clone() * s1[m].clone() * s2[p].clone());
    Ok([
        WallFactor { wall: walls[0], mu: mu0 },
        WallFactor { wall: walls[1], mu: mu1 },
        WallFactor { wall: walls[2], mu: mu2 },
    ])
}

/// Wall factors of every wall, indexed by wall id.
pub fn all_wall_factors<S: Field, T: Real>(l: &LocalSystemCochain<S>, chart: &GroupoidChart<T>) -> Result<Vec<WallFactor<S>>, NonabError> {
    let mut out = Vec::new();
    for hex in &chart.hex_loops {
        out.extend(mu_of_wall(l, chart, hex.zero)?);
    }
    out.sort_by_key(|f| f.wall);
    Ok(out)
}

/// Product of the six hexagon transports, applied in order around the zero.
pub fn hexagon_product<S: Field, T: Real>(
    l: &LocalSystemCochain<S>,
    chart: &GroupoidChart<T>,
    zero: usize,
    mus: &[S; 3],
) -> Result<Mat2<S>, NonabError> {
    let h = hex_values(l, chart, zero)?;
    let vertical = |i: usize| Mat2::upper(mus[i].clone()) * Mat2::diag(h.vert[i][0].clone(), h.vert[i][1].clone());
    let connector = |i: usize| Mat2::anti(h.conn[i][1].clone(), h.conn[i][0].clone());
    Ok(connector(2) * vertical(2) * connector(1) * vertical(1) * connector(0) * vertical(0))
}

/// `‖hexagon product − Id‖∞` for the given wall factors.
pub fn verify_hexagon<S: Field, T: Real>(
    l: &LocalSystemCochain<S>,
    chart: &GroupoidChart<T>,
    zero: usize,
    mus: &[S; 3],
) -> Result<f64, NonabError> {
    Ok(hexagon_product(l, chart, zero, mus)?.distance_to_identity())
}

/// A rank-2 transport between the ordered lift bases of two base points.
#[derive(Clone, Debug, PartialEq)]
pub struct Transport2<S> {
    pub source: usize,
    pub target: usize,
    pub matrix: Mat2<S>,
}

impl<S: Field> Transport2<S> {
    /// `self` followed by `next`.
    pub fn then(&self, next: &Transport2<S>) -> Transport2<S> {
        Transport2 { source: self.source, target: next.target, matrix: &next.matrix * &self.matrix }
    }
}

impl<T: Real> Serialize for Transport2<C<T>> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        let pair = |z: &C<T>| [z.re, z.im];
        let mm = &self.matrix.m;
        let mut m = s.serialize_map(Some(5))?;
        m.serialize_entry("source", &self.source)?;
        m.serialize_entry("target", &self.target)?;
        m.serialize_entry("matrix", &[[pair(&mm[0][0]), pair(&mm[0][1])], [pair(&mm[1][0]), pair(&mm[1][1])]])?;
        m.serialize_entry("det", &pair(&self.matrix.det()))?;
        m.serialize_entry("trace", &pair(&self.matrix.trace()))?;
        m.end()
    }
}

/// A wall crossing met along an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WallEvent {
    pub wall: usize,
    pub sign: i8,
    /// Whether the continued plus lift of the source is the wall's positive
    /// sheet at the crossing.
    pub on_plus: bool,
}

/// The combinatorics of an arc: its wall crossings in order and whether it
/// swaps the ordered lift bases of its endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArcWalk {
    pub events: Vec<WallEvent>,
    pub swaps: bool,
}

/// Walk an arc, continuing the source's plus lift to every crossing.
pub fn arc_walk<T: Real>(
    qd: &RationalQd<T>,
    net: &SpectralNetwork<T>,
    chart: &GroupoidChart<T>,
    arc: &GeneratorArc<T>,
) -> Result<ArcWalk, NonabError> {
    let xs = crossings(net, qd, &arc.polyline)?;
    let src = chart.base_point(arc.source)?;
    let tgt = chart.base_point(arc.target)?;
    let line = &arc.polyline;
    let mut cur = SheetPoint { z: src.z, sheet: 1, sqrt_value: src.plus_sqrt };
    let mut vertex = 0;
    let mut events = Vec::with_capacity(xs.len());
    let advance = |cur: &mut SheetPoint<T>, pts: Vec<C<T>>| -> Result<(), NonabError> {
        if pts.len() >= 2 {
            *cur = sqrt_continue(qd, &pts, cur).map_err(NonabError::UnliftablePath)?.0;
        }
        Ok(())
    };
    for x in &xs {
        let mut pts = vec![cur.z];
        pts.extend_from_slice(&line[vertex + 1..=x.segment]);
        pts.push(x.z);
        pts.dedup();
        advance(&mut cur, pts)?;
        vertex = x.segment;
        let on_plus = (cur.sqrt_value - x.wall_sqrt).norm() < (cur.sqrt_value + x.wall_sqrt).norm();
        events.push(WallEvent { wall: x.wall, sign: x.sign, on_plus });
    }
    let mut pts = vec![cur.z];
    pts.extend_from_slice(&line[vertex + 1..]);
    pts.dedup();
    advance(&mut cur, pts)?;
    let swaps = (cur.sqrt_value - tgt.plus_sqrt).norm() > (cur.sqrt_value + tgt.plus_sqrt).norm();
    Ok(ArcWalk { events, swaps })
}

/// Transport along one arc in its forward direction: the abelian values,
/// then a unipotent factor per crossing in the running basis, then the
/// basis reordering at the target.
pub fn arc_transport<S: Field, T: Real>(
    l: &LocalSystemCochain<S>,
    arc: &GeneratorArc<T>,
    walk: &ArcWalk,
    mus: &[WallFactor<S>],
) -> Result<Mat2<S>, NonabError> {
    let mut m = Mat2::diag(l.value(arc, Lift::Plus)?, l.value(arc, Lift::Minus)?);
    for e in &walk.events {
        let f = mus.get(e.wall).filter(|f| f.wall == e.wall).ok_or(NonabError::MissingWallFactor(e.wall))?;
        let mu = if e.sign > 0 { f.mu.clone() } else { -f.mu.clone() };
        let factor = if e.on_plus { Mat2::upper(mu) } else { Mat2::lower(mu) };
        m = factor * m;
    }
    if walk.swaps {
        m = Mat2::swap() * m;
    }
    Ok(m)
}

/// Monodromy of a closed path.
#[derive(Clone, Debug, PartialEq)]
pub struct Monodromy<S> {
    pub transport: Transport2<S>,
    pub trace: S,
    pub det: S,
    /// Product of the lifted abelian holonomies, signed by the basis
    /// reordering when the lift of the loop is not closed.
    pub abelian: S,
}

impl<T: Real> Serialize for Monodromy<C<T>> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        let pair = |z: &C<T>| [z.re, z.im];
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("transport", &self.transport)?;
        m.serialize_entry("trace", &pair(&self.trace))?;
        m.serialize_entry("det", &pair(&self.det))?;
        m.serialize_entry("abelian", &pair(&self.abelian))?;
        m.end()
    }
}

/// Maximum deviations of the W-pair structure on sampled arcs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WPairReport {
    /// Off-diagonal part (after undoing the basis reordering) of transports
    /// along arcs that cross no wall.
    pub max_off_diagonal: f64,
    /// Deviation of short-vertical transports from the unipotent form.
    pub max_unipotent_deviation: f64,
    pub checked: usize,
    pub passed: bool,
}

/// Non-abelianization on a fixed chart: caches the walk of every arc.
pub struct Nonabelianizer<'a, T: Real> {
    pub qd: &'a RationalQd<T>,
    pub net: &'a SpectralNetwork<T>,
    pub chart: &'a GroupoidChart<T>,
    /// Free paths registered after the chart was built.
    pub extra: BTreeMap<String, GeneratorArc<T>>,
    pub walks: BTreeMap<String, ArcWalk>,
}

impl<'a, T: Real> Nonabelianizer<'a, T> {
    pub fn new(qd: &'a RationalQd<T>, net: &'a SpectralNetwork<T>, chart: &'a GroupoidChart<T>) -> Result<Self, NonabError> {
        let walks = chart
            .arcs
            .par_iter()
            .map(|(id, arc)| Ok((id.clone(), arc_walk(qd, net, chart, arc)?)))
            .collect::<Result<BTreeMap<_, _>, NonabError>>()?;
        Ok(Nonabelianizer { qd, net, chart, extra: BTreeMap::new(), walks })
    }

    /// Register a free path, computing its walk.
    pub fn add_arc(&mut self, arc: GeneratorArc<T>) -> Result<(), NonabError> {
        let walk = arc_walk(self.qd, self.net, self.chart, &arc)?;
        self.walks.insert(arc.id.clone(), walk);
        self.extra.insert(arc.id.clone(), arc);
        Ok(())
    }

    /// All arcs: the chart's and the registered free paths.
    pub fn arcs(&self) -> impl Iterator<Item = &GeneratorArc<T>> {
        self.chart.arcs.values().chain(self.extra.values())
    }

    fn lookup(&self, id: &str) -> Result<(&GeneratorArc<T>, &ArcWalk), NonabError> {
        match (self.chart.arc(id).or_else(|| self.extra.get(id)), self.walks.get(id)) {
            (Some(a), Some(w)) => Ok((a, w)),
            _ => Err(NonabError::UnknownArc(id.to_string())),
        }
    }

    /// Transport along a word of arcs.
    pub fn transport<S: Field>(&self, l: &LocalSystemCochain<S>, mus: &[WallFactor<S>], path: &GroupoidPath) -> Result<Transport2<S>, NonabError> {
        let mut acc: Option<Transport2<S>> = None;
        for (i, step) in path.steps.iter().enumerate() {
            let (arc, walk) = self.lookup(&step.arc)?;
            let m = arc_transport(l, arc, walk, mus)?;
            let t = if step.reversed {
                let inv = m.inverse().ok_or_else(|| NonabError::SingularTransport { arc: arc.id.clone() })?;
                Transport2 { source: arc.target, target: arc.source, matrix: inv }
            } else {
                Transport2 { source: arc.source, target: arc.target, matrix: m }
            };
            acc = Some(match acc {
                None => t,
                Some(prev) if prev.target == t.source => prev.then(&t),
                Some(_) => return Err(NonabError::PathNotComposable { index: i }),
            });
        }
        acc.ok_or(NonabError::EmptyPath)
    }

    /// Product of the abelian holonomies of the lifts of a closed word,
    /// computed by following lifts through the cochain alone.
    pub fn abelian_holonomy<S: Field>(&self, l: &LocalSystemCochain<S>, path: &GroupoidPath) -> Result<S, NonabError> {
        let run = |mut lift: Lift| -> Result<(S, Lift), NonabError> {
            let mut h = S::one();
            for step in &path.steps {
                let (arc, walk) = self.lookup(&step.arc)?;
                if step.reversed {
                    let from = lift.after(walk.swaps);
                    h = h / l.value(arc, from)?;
                    lift = from;
                } else {
                    h = h * l.value(arc, lift)?;
                    lift = lift.after(walk.swaps);
                }
            }
            Ok((h, lift))
        };
        let (hp, end) = run(Lift::Plus)?;
        let (hm, _) = run(Lift::Minus)?;
        // An open lift runs through both lifts before closing up; the
        // reordering of the basis then contributes a sign.
        Ok(if end == Lift::Plus { hp * hm } else { -(hp * hm) })
    }

    /// Monodromy of a closed word, with the determinant checked against the
    /// abelian holonomies within `1e-10` (relative).
    pub fn monodromy<S: Field>(&self, l: &LocalSystemCochain<S>, mus: &[WallFactor<S>], path: &GroupoidPath) -> Result<Monodromy<S>, NonabError> {
        let transport = self.transport(l, mus, path)?;
        if transport.source != transport.target {
            return Err(NonabError::PathNotComposable { index: path.steps.len() });
        }
        let det = transport.matrix.det();
        let trace = transport.matrix.trace();
        let abelian = self.abelian_holonomy(l, path)?;
        let scale = 1.0 + abelian.modulus();
        if (det.clone() - abelian.clone()).modulus() > 1e-10 * scale {
            return Err(NonabError::DeterminantMismatch { det: det.modulus(), expected: abelian.modulus() });
        }
        Ok(Monodromy { transport, trace, det, abelian })
    }

    /// Apply a coboundary: each value `v` on a lift from `(s, ℓ)` to
    /// `(t, ℓ')` becomes `g(t, ℓ')·v·g(s, ℓ)⁻¹`.  Free paths without values
    /// get explicit ones.
    pub fn gauge_transform<S: Field>(&self, l: &LocalSystemCochain<S>, g: &BTreeMap<(usize, Lift), S>) -> Result<LocalSystemCochain<S>, NonabError> {
        let mut out = LocalSystemCochain { values: BTreeMap::new() };
        for arc in self.arcs() {
            let swaps = self.walks[&arc.id].swaps;
            for lift in [Lift::Plus, Lift::Minus] {
                let v = l.value(arc, lift)?;
                let gs = g[&(arc.source, lift)].clone();
                let gt = g[&(arc.target, lift.after(swaps))].clone();
                out.set(&arc.id, lift, gt * v / gs);
            }
        }
        Ok(out)
    }

    /// Check the W-pair structure on the named arcs: diagonal transport off
    /// the walls and unipotent transport across the short verticals.
    pub fn verify_w_pair<S: Field>(&self, l: &LocalSystemCochain<S>, mus: &[WallFactor<S>], arcs: &[String], tol: f64) -> Result<WPairReport, NonabError> {
        let mut max_off_diagonal: f64 = 0.0;
        let mut max_unipotent_deviation: f64 = 0.0;
        for id in arcs {
            let (arc, walk) = self.lookup(id)?;
            let mut m = arc_transport(l, arc, walk, mus)?;
            if walk.swaps {
                m = Mat2::swap() * m;
            }
            match arc.kind {
                ArcKind::ShortVertical { wall } => {
                    let mu = mus.get(wall).ok_or(NonabError::MissingWallFactor(wall))?.mu.clone();
                    let expected = Mat2::upper(mu) * Mat2::diag(l.value(arc, Lift::Plus)?, l.value(arc, Lift::Minus)?);
                    max_unipotent_deviation = max_unipotent_deviation.max(m.sub(&expected).norm_inf());
                }
                _ if walk.events.is_empty() => {
                    max_off_diagonal = max_off_diagonal.max(m.m[0][1].modulus()).max(m.m[1][0].modulus());
                }
                _ => continue,
            }
        }
        let passed = max_off_diagonal < tol && max_unipotent_deviation < tol;
        Ok(WPairReport { max_off_diagonal, max_unipotent_deviation, checked: arcs.len(), passed })
    }
}

/// Random coboundary: a nonzero scalar per lifted base point.
pub fn random_gauge<T: Real, R: Rng>(chart: &GroupoidChart<T>, rng: &mut R) -> BTreeMap<(usize, Lift), C<T>> {
    let mut g = BTreeMap::new();
    for bp in &chart.base_points {
        for lift in [Lift::Plus, Lift::Minus] {
            g.insert((bp.id, lift), random_unit_scale(rng));
        }
    }
    g
}
