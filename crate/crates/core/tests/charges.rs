use num_complex::Complex64;
use specnet::charges::{is_real_exact, saddle_charge, standard_saddles, w_diff, ChargeError};
use specnet::network::build;
use specnet::qdiff::RationalQd;
use specnet::trajectory::{trace_wall, IntegrationParams};
use std::f64::consts::{FRAC_PI_2, PI};

fn qd(num: &[(f64, f64)]) -> RationalQd<f64> {
    RationalQd::construct(num.iter().map(|&(a, b)| Complex64::new(a, b)).collect(), vec![Complex64::new(1.0, 0.0)]).unwrap()
}

#[test]
fn vertical_saddle_charge() {
    let q = qd(&[(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
    let t = std::time::Instant::now();
    let s = standard_saddles(&q, &IntegrationParams::default()).unwrap();
    eprintln!("sweep {:?}", t.elapsed());
    assert_eq!(s.len(), 1, "{s:?}");
    assert_eq!(s[0].endpoints, (0, 1));
    assert!((s[0].phase - FRAC_PI_2).abs() < 1e-8, "{}", s[0].phase - FRAC_PI_2);
    assert!((s[0].charge.norm() - PI).abs() < 1e-6, "{}", s[0].charge.norm() - PI);
    let r = is_real_exact(&q, &IntegrationParams::default()).unwrap();
    assert!(r.real_exact && r.residuals[0] < 1e-9, "{:?}", r.residuals);
}

#[test]
fn tilted_differential_is_not_exact() {
    let w = Complex64::from_polar(1.0, PI / 4.0);
    let q = qd(&[(-w.re, -w.im), (0.0, 0.0), (1.0, 0.0)]);
    let r = is_real_exact(&q, &IntegrationParams::default()).unwrap();
    assert!(!r.saddles.is_empty());
    assert!(!r.real_exact, "{r:?}");
}

#[test]
fn toy_w_diff() {
    let q = qd(&[(0.0, 0.0), (1.0, 0.0)]);
    let net = build(&q, 0.0, &IntegrationParams::default()).unwrap();
    for r in [0.5f64, 1.0, 2.0] {
        let o = w_diff(&q, &net, Complex64::new(r, 0.0)).unwrap();
        assert!((o.w_diff - 4.0 / 3.0 * r.powf(1.5)).abs() < 1e-7, "{}", o.w_diff - 4.0 / 3.0 * r.powf(1.5));
        assert_eq!(o.plus_sheet, 1);
    }
    let on = w_diff(&q, &net, Complex64::from_polar(1.5, PI / 3.0));
    assert_eq!(on.unwrap_err(), ChargeError::OnVerticalNetwork);
}

#[test]
fn toy_wall_is_not_a_saddle() {
    let q = qd(&[(0.0, 0.0), (1.0, 0.0)]);
    let w = trace_wall(&q, 0, 0, 0.0, &IntegrationParams::default()).unwrap();
    assert_eq!(saddle_charge(&q, &w).unwrap_err(), ChargeError::NotASaddle);
}
