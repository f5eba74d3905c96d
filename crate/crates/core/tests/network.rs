use num_complex::Complex64;
use specnet::network::{build, generic_phase, SheetLabel};
use specnet::qdiff::RationalQd;
use specnet::trajectory::{IntegrationParams, Termination};

fn two_zero() -> RationalQd<f64> {
    RationalQd::construct(
        vec![Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0)],
    )
    .unwrap()
}

#[test]
fn two_zero_network_is_saddle_free_at_zero_phase() {
    let q = two_zero();
    let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
    assert_eq!(net.walls.len(), 6);
    assert!(net.saddle_free);
    for z in 0..2 {
        let labels: Vec<SheetLabel> = net.walls_of(z).iter().map(|w| w.label).collect();
        assert_eq!(labels, vec![SheetLabel::MinusPlus, SheetLabel::PlusMinus, SheetLabel::PlusMinus]);
    }
}

#[test]
fn vertical_saddle_at_right_angle_phase() {
    let q = two_zero();
    let net = build(&q, std::f64::consts::FRAC_PI_2, &IntegrationParams::default()).unwrap();
    assert!(!net.saddle_free);
    let saddles: Vec<_> = net.walls.iter().filter(|w| w.saddle_partner.is_some()).collect();
    assert_eq!(saddles.len(), 2);
    for w in saddles {
        assert!(matches!(w.trajectory.termination, Termination::ZeroHit(_)));
        let (j, partner) = w.saddle_partner.unwrap();
        assert_ne!(j, w.parent_zero);
        assert_eq!(net.walls[partner].saddle_partner.unwrap().0, w.parent_zero);
    }
}

#[test]
fn generic_phase_steps_off_the_saddle() {
    let q = two_zero();
    let p = IntegrationParams::default();
    assert_eq!(generic_phase(&q, 0.0, &p, 1e-3).unwrap(), 0.0);
    let t = generic_phase(&q, std::f64::consts::FRAC_PI_2, &p, 1e-3).unwrap();
    assert!(((t - std::f64::consts::FRAC_PI_2).abs() - 1e-3).abs() < 1e-12);
}

fn angle_at_radius(line: &[Complex64], r: f64) -> f64 {
    let i = line.iter().position(|z| z.norm() >= r).expect("wall reaches the radius");
    let (a, b) = (line[i - 1], line[i]);
    let t = (r - a.norm()) / (b.norm() - a.norm());
    (a + (b - a) * t).arg()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

mod rotation {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn toy_walls_are_rotated_rays(theta in 0.0f64..std::f64::consts::PI) {
            let q = RationalQd::construct(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
            let net = build(&q, theta, &IntegrationParams::default()).unwrap();
            for w in &net.walls {
                let line: Vec<Complex64> = w.dense.iter().map(|p| p.0).collect();
                let got = angle_at_radius(&line, 10.0);
                let best = (0..3)
                    .map(|k| angle_gap(got, (2.0 * theta + std::f64::consts::TAU * k as f64) / 3.0))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-6, "θ={} wall {} off by {:e}", theta, w.id, best);
            }
        }
    }
}
