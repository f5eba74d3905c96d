use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specnet::groupoid::{build_chart, outer_loop, vertical_id, GroupoidChart, GroupoidPath};
use specnet::mat2::Mat2;
use specnet::network::{build, SpectralNetwork};
use specnet::nonabelianize::*;
use specnet::qdiff::RationalQd;
use specnet::scalar::ExactComplex;
use specnet::trajectory::IntegrationParams;

fn qd(num: &[f64]) -> RationalQd<f64> {
    RationalQd::construct(num.iter().map(|&a| Complex64::new(a, 0.0)).collect(), vec![Complex64::new(1.0, 0.0)]).unwrap()
}

fn setup(num: &[f64], t: f64, eta: f64) -> (RationalQd<f64>, SpectralNetwork<f64>, GroupoidChart<f64>) {
    let q = qd(num);
    let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
    let chart = build_chart(&q, &net, t, eta).unwrap();
    (q, net, chart)
}

fn mus3(f: &[WallFactor<Complex64>; 3]) -> [Complex64; 3] {
    [f[0].mu, f[1].mu, f[2].mu]
}

#[test]
fn trivial_with_sign() {
    let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
    let l = LocalSystemCochain::<Complex64>::trivial_with_sign(&chart);
    assert!(validate(&l, &chart).unwrap().passed);
    let f = mu_of_wall(&l, &chart, 0).unwrap();
    for w in &f {
        assert!((w.mu.norm() - 1.0).abs() < 1e-15);
    }
    assert!(verify_hexagon(&l, &chart, 0, &mus3(&f)).unwrap() < 1e-12);
    let mut bad = l.clone();
    bad.set("h0.1", Lift::Plus, Complex64::new(1.0, 0.0));
    let r = validate(&bad, &chart).unwrap();
    assert!(!r.passed && (r.residuals[0] - 2.0).abs() < 1e-15);
    let mut zero = l.clone();
    zero.set("h0.3", Lift::Plus, Complex64::new(0.0, 0.0));
    assert!(matches!(mu_of_wall(&zero, &chart, 0), Err(NonabError::ZeroValue { .. })));
    let mut missing = l;
    missing.values.remove(&("v1".to_string(), Lift::Minus));
    assert!(matches!(validate(&missing, &chart), Err(NonabError::MissingGenerator { .. })));
}

#[test]
fn random_hexagons_and_sensitivity() {
    let (_q, _net, chart) = setup(&[-1.0, 0.0, 1.0], 0.3, 0.03);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let l = LocalSystemCochain::random(&chart, &mut rng);
        assert!(validate(&l, &chart).unwrap().passed);
        for zero in 0..2 {
            let mus = mus3(&mu_of_wall(&l, &chart, zero).unwrap());
            assert!(verify_hexagon(&l, &chart, zero, &mus).unwrap() < 1e-12);
            for i in 0..3 {
                let mut p = mus;
                p[i] += 1e-3;
                assert!(verify_hexagon(&l, &chart, zero, &p).unwrap() >= 1e-4);
            }
        }
    }
}

#[test]
fn scaling_one_connector_lift() {
    let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let l = LocalSystemCochain::random(&chart, &mut rng);
    let base = mus3(&mu_of_wall(&l, &chart, 0).unwrap());
    let t = Complex64::new(0.3, -1.7);
    let mut scaled = l.clone();
    let v = scaled.values[&("h0.3".to_string(), Lift::Plus)];
    scaled.set("h0.3", Lift::Plus, v * t);
    // Almost-flatness now fails, so rescale the opposite lift to compensate.
    let w = scaled.values[&("h0.3".to_string(), Lift::Minus)];
    scaled.set("h0.3", Lift::Minus, w / t);
    let mus = mus3(&mu_of_wall(&scaled, &chart, 0).unwrap());
    // B⁺ enters μ(w₀) only; B⁻ enters μ(w₁) and μ(w₋₁).
    assert!((mus[0] - base[0] * t).norm() < 1e-12);
    assert!((mus[1] - base[1] / t).norm() < 1e-12);
    assert!((mus[2] - base[2] / t).norm() < 1e-12);
    assert!(verify_hexagon(&scaled, &chart, 0, &mus).unwrap() < 1e-12);
}

#[test]
fn exact_rational_hexagon() {
    let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let mut l = LocalSystemCochain::<ExactComplex>::trivial_with_sign(&chart);
    for (i, key) in l.values.clone().keys().enumerate() {
        l.values.insert(key.clone(), Complex::new(q(i as i64 + 2, 3), q(1 - i as i64, 5)));
    }
    l.enforce_flatness(&chart).unwrap();
    assert_eq!(validate(&l, &chart).unwrap().residuals, vec![0.0]);
    let f = mu_of_wall(&l, &chart, 0).unwrap();
    let mus = [f[0].mu.clone(), f[1].mu.clone(), f[2].mu.clone()];
    assert_eq!(hexagon_product(&l, &chart, 0, &mus).unwrap(), Mat2::identity());
}

#[test]
fn transports() {
    let (q, net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
    let nab = Nonabelianizer::new(&q, &net, &chart).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let l = LocalSystemCochain::random(&chart, &mut rng);
    let mus = all_wall_factors(&l, &chart).unwrap();
    // Short vertical: unipotent upper-triangular in the wall basis.
    let triv = LocalSystemCochain::<Complex64>::trivial_with_sign(&chart);
    let tmus = all_wall_factors(&triv, &chart).unwrap();
    let v = nab.transport(&triv, &tmus, &GroupoidPath::single(&vertical_id(0))).unwrap();
    assert!(v.matrix.sub(&Mat2::upper(tmus[0].mu)).max_abs() < 1e-15);
    // Hexagon: identity.
    let hex = chart.hex_loops[0].path();
    let m = nab.monodromy(&l, &mus, &hex).unwrap();
    assert!(m.transport.matrix.distance_to_identity() < 1e-12);
    assert!((m.trace - 2.0).norm() < 1e-12 && (m.det - 1.0).norm() < 1e-12);
    // W-pair on the chart generators.
    let ids: Vec<String> = chart.arcs.keys().cloned().collect();
    assert!(nab.verify_w_pair(&l, &mus, &ids, 1e-12).unwrap().passed);
    // Fault injection: a mis-signed crossing is detected.
    let mut broken = Nonabelianizer::new(&q, &net, &chart).unwrap();
    broken.walks.get_mut("v0").unwrap().events[0].sign *= -1;
    let r = broken.verify_w_pair(&l, &mus, &ids, 1e-12).unwrap();
    assert!(!r.passed && r.max_unipotent_deviation >= 1e-3);
}

#[test]
fn two_zero_monodromy_and_gauge() {
    let (q, net, mut chart) = setup(&[-1.0, 0.0, 1.0], 0.3, 0.03);
    let (free, word) = outer_loop(&q, &net, &chart).unwrap();
    for a in free {
        chart.insert_arc(a);
    }
    let nab = Nonabelianizer::new(&q, &net, &chart).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = LocalSystemCochain::random(&chart, &mut rng);
    let mus = all_wall_factors(&l, &chart).unwrap();
    let m = nab.monodromy(&l, &mus, &word).unwrap();
    assert!((m.det - m.abelian).norm() < 1e-10 * (1.0 + m.abelian.norm()));
    for _ in 0..10 {
        let g: BTreeMap<_, _> = random_gauge(&chart, &mut rng);
        let lg = nab.gauge_transform(&l, &g).unwrap();
        assert!(validate(&lg, &chart).unwrap().passed);
        let mg = all_wall_factors(&lg, &chart).unwrap();
        let m2 = nab.monodromy(&lg, &mg, &word).unwrap();
        assert!((m2.trace - m.trace).norm() < 1e-10 * (1.0 + m.trace.norm()));
        for hex in &chart.hex_loops {
            let h = nab.monodromy(&lg, &mg, &hex.path()).unwrap();
            assert!(h.transport.matrix.distance_to_identity() < 1e-12);
        }
    }
}

#[test]
fn cochain_json_round_trip() {
    let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
    let l = LocalSystemCochain::random(&chart, &mut ChaCha8Rng::seed_from_u64(1));
    let s = serde_json::to_string(&l).unwrap();
    assert!(s.contains("\"h0.1:+\""));
    let back: LocalSystemCochain<Complex64> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, l);
}

#[test]
fn functoriality_of_concatenation() {
    let (q, net, chart) = setup(&[-1.0, 0.0, 1.0], 0.3, 0.03);
    let mut nab = Nonabelianizer::new(&q, &net, &chart).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let l = LocalSystemCochain::random(&chart, &mut rng);
    let mus = all_wall_factors(&l, &chart).unwrap();
    let n = chart.base_points.len();
    for k in 0..10 {
        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        let p = chart.random_free_path(&q, &net, &format!("p{k}"), a, b, 2.5, &mut rng).unwrap();
        let r = chart.random_free_path(&q, &net, &format!("q{k}"), b, c, 2.5, &mut rng).unwrap();
        let mut joined = p.polyline.clone();
        joined.extend_from_slice(&r.polyline[1..]);
        let Ok(pq) = chart.free_path(&q, &format!("pq{k}"), joined, a, c) else { continue };
        for arc in [p, r, pq] {
            nab.add_arc(arc).unwrap();
        }
        let whole = nab.transport(&l, &mus, &GroupoidPath::single(&format!("pq{k}"))).unwrap();
        let parts = nab
            .transport(&l, &mus, &GroupoidPath::single(&format!("p{k}")).then(&GroupoidPath::single(&format!("q{k}"))))
            .unwrap();
        assert!(whole.matrix.sub(&parts.matrix).norm_inf() < 1e-12);
    }
}

mod invariants {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hexagon_identity_for_any_seed(seed in any::<u64>()) {
            let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
            let l = LocalSystemCochain::random(&chart, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(validate(&l, &chart).unwrap().passed);
            let mus = mus3(&mu_of_wall(&l, &chart, 0).unwrap());
            prop_assert!(verify_hexagon(&l, &chart, 0, &mus).unwrap() < 1e-12);
        }

        #[test]
        fn non_flat_systems_fail_the_identity(seed in any::<u64>(), kick in 1e-5f64..1.0) {
            let (_q, _net, chart) = setup(&[0.0, 1.0], 0.5, 0.05);
            let mut l = LocalSystemCochain::random(&chart, &mut ChaCha8Rng::seed_from_u64(seed));
            let key = ("v1".to_string(), Lift::Minus);
            let v = l.values[&key];
            l.values.insert(key, v * (1.0 + kick));
            let flat = validate(&l, &chart).unwrap().residuals[0];
            let mus = mus3(&mu_of_wall(&l, &chart, 0).unwrap());
            let hex = verify_hexagon(&l, &chart, 0, &mus).unwrap();
            prop_assert!(flat < 1e-6 || hex > 1e-7, "flatness {} but hexagon {}", flat, hex);
        }
    }
}
