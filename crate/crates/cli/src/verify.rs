//! Invariant suite run by `specnet verify`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use specnet::geometry::hausdorff;
use specnet::network::{build, SpectralNetwork};
use specnet::nonabelianize::{all_wall_factors, random_gauge, LocalSystemCochain, Nonabelianizer};
use specnet::qdiff::{sqrt_continue, RationalQd, SheetPoint};
use specnet::trajectory::{flowline, trace};

use crate::commands::{chart_with_outer_loop, load_differential, saddle_free_network, Outcome};
use crate::config::RunConfig;
use crate::exit::{CliError, Exit};
use crate::json::to_json;

/// Tolerance on wall residuals (unit speed, GMN equation, integral).
pub const WALL_RESIDUAL_TOL: f64 = 1e-6;
/// Hausdorff tolerance between flow lines and trajectories.
pub const FLOWLINE_TOL: f64 = 1e-5;
/// Relative tolerance on rotated walls.
pub const ROTATION_TOL: f64 = 1e-6;
/// Relative tolerance on monodromy traces under gauge transformations.
pub const GAUGE_TOL: f64 = 1e-10;

const FLOWLINE_SAMPLES: usize = 5;
const FLOWLINE_LENGTH: f64 = 3.0;
const ROTATION_ANGLE: f64 = 0.3;
const GAUGE_SAMPLES: usize = 10;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value < tolerance, note: None }
    }

    fn failed(name: &str, note: String) -> Self {
        Check { name: name.into(), value: f64::NAN, tolerance: 0.0, passed: false, note: Some(note) }
    }

    fn skipped(name: &str, note: String) -> Self {
        Check { name: name.into(), value: 0.0, tolerance: 0.0, passed: true, note: Some(format!("skipped: {note}")) }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    checks: Vec<Check>,
    passed: bool,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Sheet flip around each zero on a small circle.
fn sheet_monodromy(qd: &RationalQd<f64>) -> Result<Check, CliError> {
    let critical = qd.inventory().finite_critical_points();
    let mut worst: f64 = 0.0;
    for &b in qd.zeros() {
        let clearance = critical
            .iter()
            .filter(|&&p| p != b)
            .map(|&p| (p - b).norm())
            .fold(1.0, f64::min);
        let r = 0.25 * clearance;
        let circle: Vec<Complex64> = (0..=64).map(|k| b + Complex64::from_polar(r, TAU * k as f64 / 64.0)).collect();
        let start = SheetPoint::on_sheet(qd, circle[0], 1)?;
        let (end, _) = sqrt_continue(qd, &circle, &start)?;
        worst = worst.max((end.sqrt_value + start.sqrt_value).norm() / start.sqrt_value.norm());
    }
    Ok(Check::below("sheet_monodromy", worst, 1e-10))
}

fn wall_residuals(qd: &RationalQd<f64>, net: &SpectralNetwork<f64>) -> Vec<Check> {
    let (mut speed, mut gmn, mut integral): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for w in &net.walls {
        let r = w.trajectory.residuals(qd);
        speed = speed.max(r.unit_speed);
        gmn = gmn.max(r.gmn);
        integral = integral.max(r.integral);
    }
    vec![
        Check::below("unit_speed_residual", speed, WALL_RESIDUAL_TOL),
        Check::below("gmn_residual", gmn, WALL_RESIDUAL_TOL),
        Check::below("integral_residual", integral, WALL_RESIDUAL_TOL),
    ]
}

fn flowline_agreement(qd: &RationalQd<f64>, cfg: &RunConfig, theta: f64, rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let params = cfg.integration.with_max_length(FLOWLINE_LENGTH);
    let reach = qd.zeros().iter().map(|z| z.norm()).fold(1.0, f64::max) * 2.0;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < FLOWLINE_SAMPLES {
        let z = Complex64::new(reach * (2.0 * uniform(rng) - 1.0), reach * (2.0 * uniform(rng) - 1.0));
        if qd.critical_distance(z) < 0.1 * qd.min_separation().min(1.0) {
            continue;
        }
        let f = flowline(qd, z, (1, -1), theta, &params)?;
        let t = trace(qd, &SheetPoint::on_sheet(qd, z, 1)?, -1, theta, &params)?;
        worst = worst.max(hausdorff(&f.points, &t.dense_polyline(qd, 0.002, 0.005)));
        done += 1;
    }
    Ok(Check::below("flowline_agreement", worst, FLOWLINE_TOL))
}

/// Rotating φ by `e^{2iα}` and the phase by `α` leaves every wall in place.
fn rotation_covariance(qd: &RationalQd<f64>, net: &SpectralNetwork<f64>, cfg: &RunConfig) -> Result<Check, CliError> {
    let rq = qd.rotated(ROTATION_ANGLE);
    let rnet = build(&rq, net.theta + ROTATION_ANGLE, &cfg.integration)?;
    let mut worst: f64 = 0.0;
    for w in &net.walls {
        let len = w.trajectory.length();
        let samples: Vec<f64> = (1..=8).map(|i| len * i as f64 / 8.0).collect();
        let mine: Vec<Complex64> = samples.iter().map(|&s| w.trajectory.sample(qd, s).0).collect();
        let best = rnet
            .walls
            .iter()
            .filter(|v| (v.trajectory.length() - len).abs() < 1e-6 * (1.0 + len))
            .map(|v| {
                samples
                    .iter()
                    .zip(&mine)
                    .map(|(&s, &z)| (v.trajectory.sample(&rq, s).0 - z).norm() / (1.0 + z.norm()))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    Ok(Check::below("rotation_covariance", worst, ROTATION_TOL))
}

/// Traces of monodromies are invariant under random coboundaries.
fn gauge_invariance(qd: &RationalQd<f64>, cfg: &RunConfig, theta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let net = saddle_free_network(qd, cfg, theta)?;
    let (chart, outer) = chart_with_outer_loop(qd, &net, cfg)?;
    let nab = Nonabelianizer::new(qd, &net, &chart)?;
    let l = LocalSystemCochain::random(&chart, rng);
    let mus = all_wall_factors(&l, &chart)?;
    let mut loops: Vec<_> = chart.hex_loops.iter().map(|h| h.path()).collect();
    loops.extend(outer);
    let base: Vec<Complex64> = loops
        .iter()
        .map(|p| nab.monodromy(&l, &mus, p).map(|m| m.trace))
        .collect::<Result<_, _>>()?;
    let hex_worst = loops[..chart.hex_loops.len()]
        .iter()
        .map(|p| nab.transport(&l, &mus, p).map(|t| t.matrix.distance_to_identity()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for _ in 0..GAUGE_SAMPLES {
        let g = random_gauge(&chart, rng);
        let lg = nab.gauge_transform(&l, &g)?;
        let mg = all_wall_factors(&lg, &chart)?;
        for (p, t0) in loops.iter().zip(&base) {
            let t = nab.monodromy(&lg, &mg, p)?.trace;
            worst = worst.max((t - t0).norm() / (1.0 + t0.norm()));
        }
    }
    Ok(vec![Check::below("hexagon_identity", hex_worst, 1e-12), Check::below("gauge_trace_invariance", worst, GAUGE_TOL)])
}

pub fn verify(cfg: &RunConfig, theta: f64, seed: u64) -> Result<Outcome, CliError> {
    let qd = load_differential(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![sheet_monodromy(&qd)?];
    match build(&qd, theta, &cfg.integration) {
        Ok(net) => {
            checks.extend(wall_residuals(&qd, &net));
            checks.push(rotation_covariance(&qd, &net, cfg).unwrap_or_else(|e| Check::failed("rotation_covariance", e.message)));
        }
        Err(e) => checks.push(Check::failed("network", e.to_string())),
    }
    checks.push(flowline_agreement(&qd, cfg, theta, &mut rng).unwrap_or_else(|e| Check::failed("flowline_agreement", e.message)));
    if qd.zeros().is_empty() {
        checks.push(Check::skipped("gauge_trace_invariance", "φ has no zeros".into()));
    } else {
        match gauge_invariance(&qd, cfg, theta, &mut rng) {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(Check::failed("gauge_trace_invariance", e.message)),
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = if passed {
        format!("all {} checks passed", checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(Outcome {
        exit: if passed { Exit::Ok } else { Exit::VerifyFailed },
        json: to_json(&VerifyReport { seed, checks, passed }),
        svg: None,
        summary,
    })
}
