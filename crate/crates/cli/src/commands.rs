//! Subcommand pipelines.  Each returns the documents to emit and the exit
//! code; writing them out is left to the caller.

use num_complex::Complex64;
use serde::Serialize;
use specnet::charges::{is_real_exact, ExactnessReport};
use specnet::groupoid::{build_chart, outer_loop, GroupoidChart, GroupoidPath};
use specnet::network::{build, generic_phase, SpectralNetwork};
use specnet::nonabelianize::{
    all_wall_factors, validate, verify_hexagon, FlatnessReport, LocalSystemCochain, Monodromy, Nonabelianizer, Transport2,
    WPairReport, WallFactor,
};
use specnet::qdiff::{CriticalInventory, RationalQd};

use crate::config::RunConfig;
use crate::exit::{CliError, Exit};
use crate::json::to_json;
use crate::svg;

/// Residual threshold for the non-abelianization verdict.
pub const NONAB_TOL: f64 = 1e-9;

/// Phase step used to move off a saddle.
const PHASE_STEP: f64 = 1e-3;

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub exit: Exit,
    pub json: String,
    pub svg: Option<String>,
    /// One-line human-readable verdict.
    pub summary: String,
}

/// The differential, checked to be complete GMN.
pub fn load_differential(cfg: &RunConfig) -> Result<RationalQd<f64>, CliError> {
    let qd = cfg.differential()?;
    qd.require_complete_gmn()?;
    cfg.integration.validate(&qd)?;
    Ok(qd)
}

#[derive(Serialize)]
struct NetworkReport<'a> {
    inventory: &'a CriticalInventory<f64>,
    network: &'a SpectralNetwork<f64>,
}

pub fn network(cfg: &RunConfig, theta: f64) -> Result<Outcome, CliError> {
    let qd = load_differential(cfg)?;
    let net = build(&qd, theta, &cfg.integration)?;
    let summary = format!(
        "{} walls, {}",
        net.walls.len(),
        if net.saddle_free { "saddle-free" } else { "saddle present" }
    );
    Ok(Outcome {
        exit: Exit::Ok,
        json: to_json(&NetworkReport { inventory: qd.inventory(), network: &net }),
        svg: Some(svg::render(&qd, &net)),
        summary,
    })
}

pub fn exact(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let qd = load_differential(cfg)?;
    let report: ExactnessReport<f64> = is_real_exact(&qd, &cfg.integration)?;
    let worst = report.residuals.iter().copied().fold(0.0, f64::max);
    let (exit, verdict) = if report.real_exact { (Exit::Ok, "real-exact") } else { (Exit::NotExact, "not real-exact") };
    Ok(Outcome {
        exit,
        json: to_json(&report),
        svg: None,
        summary: format!("{verdict}: {} saddle classes, max residual {worst:.3e}", report.saddles.len()),
    })
}

/// Network at `theta`, moved to a nearby saddle-free phase if needed.
pub fn saddle_free_network(qd: &RationalQd<f64>, cfg: &RunConfig, theta: f64) -> Result<SpectralNetwork<f64>, CliError> {
    let net = build(qd, theta, &cfg.integration)?;
    if net.saddle_free {
        return Ok(net);
    }
    let theta = generic_phase(qd, theta, &cfg.integration, PHASE_STEP)?;
    Ok(build(qd, theta, &cfg.integration)?)
}

/// Chart plus the free paths of the outer loop, when it can be routed.
pub fn chart_with_outer_loop(
    qd: &RationalQd<f64>,
    net: &SpectralNetwork<f64>,
    cfg: &RunConfig,
) -> Result<(GroupoidChart<f64>, Option<GroupoidPath>), CliError> {
    let mut chart = build_chart(qd, net, cfg.groupoid.truncation, cfg.groupoid.eta)?;
    let outer = match outer_loop(qd, net, &chart) {
        Ok((arcs, word)) => {
            for a in arcs {
                chart.insert_arc(a);
            }
            Some(word)
        }
        Err(_) => None,
    };
    Ok((chart, outer))
}

/// Expand `@hex<z>` and `@outer` macros in a word.
pub fn expand_word(words: &[String], chart: &GroupoidChart<f64>, outer: Option<&GroupoidPath>) -> Result<GroupoidPath, CliError> {
    let mut path = GroupoidPath::default();
    for w in words {
        let piece = if w == "@outer" {
            outer.cloned().ok_or_else(|| CliError::new(Exit::Construction, "the outer loop could not be routed"))?
        } else if let Some(z) = w.strip_prefix("@hex") {
            let z: usize = z.parse().map_err(|_| CliError::new(Exit::Parse, format!("bad hexagon reference {w}")))?;
            chart
                .hex_loops
                .get(z)
                .ok_or_else(|| CliError::new(Exit::Parse, format!("no zero {z}")))?
                .path()
        } else {
            GroupoidPath::parse(std::slice::from_ref(w))
        };
        path = path.then(&piece);
    }
    Ok(path)
}

#[derive(Serialize)]
struct NamedTransport {
    word: Vec<String>,
    transport: Transport2<Complex64>,
}

#[derive(Serialize)]
struct NamedMonodromy {
    word: Vec<String>,
    monodromy: Monodromy<Complex64>,
}

#[derive(Serialize)]
struct NonabReport<'a> {
    theta: f64,
    chart: &'a GroupoidChart<f64>,
    flatness: FlatnessReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    wall_factors: Vec<WallFactor<Complex64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    hexagon_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_pair: Option<WPairReport>,
    transports: Vec<NamedTransport>,
    monodromies: Vec<NamedMonodromy>,
    passed: bool,
}

pub fn nonab(cfg: &RunConfig, theta: f64) -> Result<Outcome, CliError> {
    let spec = cfg
        .local_system
        .as_ref()
        .ok_or_else(|| CliError::new(Exit::Parse, "config has no local_system"))?;
    let qd = load_differential(cfg)?;
    let net = saddle_free_network(&qd, cfg, theta)?;
    let (chart, outer) = chart_with_outer_loop(&qd, &net, cfg)?;
    let l: LocalSystemCochain<Complex64> = spec.realize(&chart);
    let flatness = validate(&l, &chart)?;
    let mut report = NonabReport {
        theta: net.theta,
        chart: &chart,
        flatness: flatness.clone(),
        wall_factors: Vec::new(),
        hexagon_residuals: Vec::new(),
        w_pair: None,
        transports: Vec::new(),
        monodromies: Vec::new(),
        passed: false,
    };
    if !flatness.passed {
        let per_zero: Vec<String> = flatness.residuals.iter().map(|r| format!("{r:.3e}")).collect();
        return Ok(Outcome {
            exit: Exit::Flatness,
            json: to_json(&report),
            svg: None,
            summary: format!("local system is not almost-flat; hexagon holonomy residuals per zero: {}", per_zero.join(", ")),
        });
    }
    let nab = Nonabelianizer::new(&qd, &net, &chart)?;
    let mus = all_wall_factors(&l, &chart)?;
    for hex in &chart.hex_loops {
        let m: [Complex64; 3] = [0, 1, 2].map(|i| mus[hex.walls[i]].mu);
        report.hexagon_residuals.push(verify_hexagon(&l, &chart, hex.zero, &m)?);
    }
    let ids: Vec<String> = chart.arcs.keys().cloned().collect();
    let w_pair = nab.verify_w_pair(&l, &mus, &ids, NONAB_TOL)?;
    for words in &cfg.requests.transports {
        let path = expand_word(words, &chart, outer.as_ref())?;
        report.transports.push(NamedTransport { word: words.clone(), transport: nab.transport(&l, &mus, &path)? });
    }
    let mut loops = cfg.requests.monodromies.clone();
    if loops.is_empty() {
        loops = (0..chart.hex_loops.len()).map(|z| vec![format!("@hex{z}")]).collect();
        if outer.is_some() {
            loops.push(vec!["@outer".to_string()]);
        }
    }
    for words in &loops {
        let path = expand_word(words, &chart, outer.as_ref())?;
        report.monodromies.push(NamedMonodromy { word: words.clone(), monodromy: nab.monodromy(&l, &mus, &path)? });
    }
    let worst = report.hexagon_residuals.iter().copied().fold(0.0, f64::max);
    let passed = worst < NONAB_TOL && w_pair.passed;
    report.w_pair = Some(w_pair);
    report.wall_factors = mus;
    report.passed = passed;
    Ok(Outcome {
        exit: if passed { Exit::Ok } else { Exit::Flatness },
        json: to_json(&report),
        svg: None,
        summary: format!("max hexagon residual {worst:.3e}, {} monodromies", report.monodromies.len()),
    })
}
