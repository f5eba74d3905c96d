use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use specnet::qdiff::{phi_length, sqrt_continue, QdError, RationalQd, SheetPoint};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn poly(num: &[f64]) -> RationalQd<f64> {
    RationalQd::construct(num.iter().map(|&a| cx(a, 0.0)).collect(), vec![cx(1.0, 0.0)]).unwrap()
}

fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..=n).map(|k| center + Complex64::from_polar(r, TAU * k as f64 / n as f64)).collect()
}

#[test]
fn pole_orders_at_infinity() {
    assert_eq!(poly(&[0.0, 1.0]).inventory().pole_at_infinity, Some(5));
    assert_eq!(poly(&[-1.0, 0.0, 1.0]).inventory().pole_at_infinity, Some(6));
    assert!(poly(&[-1.0, 0.0, 1.0]).require_complete_gmn().is_ok());
}

#[test]
fn double_zero_is_rejected() {
    let r = RationalQd::construct(vec![cx(1.0, 0.0), cx(-2.0, 0.0), cx(1.0, 0.0)], vec![cx(1.0, 0.0)]);
    assert!(matches!(r, Err(QdError::NonSimpleZero { .. }) | Err(QdError::NotGMN(_))));
}

#[test]
fn sheet_monodromy() {
    let q = poly(&[-1.0, 0.0, 1.0]);
    for &b in q.zeros() {
        let path = circle(b, 0.5, 64);
        let start = SheetPoint::on_sheet(&q, path[0], 1).unwrap();
        let (end, _) = sqrt_continue(&q, &path, &start).unwrap();
        assert!((end.sqrt_value + start.sqrt_value).norm() < 1e-12);
    }
    let path = circle(cx(0.0, 0.0), 2.0, 128);
    let start = SheetPoint::on_sheet(&q, path[0], 1).unwrap();
    let (end, _) = sqrt_continue(&q, &path, &start).unwrap();
    assert!((end.sqrt_value - start.sqrt_value).norm() < 1e-12);
}

#[test]
fn length_along_the_real_axis() {
    // ∫₁² √(x² − 1) dx = (2√3 − ln(2 + √3)) / 2.
    let q = poly(&[-1.0, 0.0, 1.0]);
    let exact = (2.0 * 3f64.sqrt() - (2.0 + 3f64.sqrt()).ln()) / 2.0;
    let l = phi_length(&q, &[cx(1.0 + 1e-9, 0.0), cx(2.0, 0.0)]).unwrap();
    assert!((l - exact).abs() < 1e-8, "{l} vs {exact}");
}

#[test]
fn single_precision_inventory() {
    let q = RationalQd::<f32>::construct(
        vec![Complex::new(-1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
        vec![Complex::new(1.0, 0.0)],
    )
    .unwrap();
    let mut z: Vec<f32> = q.zeros().iter().map(|z| z.re).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((z[0] + 1.0).abs() < 1e-5 && (z[1] - 1.0).abs() < 1e-5);
}

use num_complex::Complex;

proptest! {
    #[test]
    fn principal_root_squares_back(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let q = poly(&[-1.0, 0.0, 1.0]);
        let z = cx(re, im);
        prop_assume!(q.critical_distance(z) > 1e-3);
        let s = q.sqrt_principal(z).unwrap();
        let v = q.eval(z).unwrap();
        prop_assert!((s * s - v).norm() <= 1e-12 * (1.0 + v.norm()));
        prop_assert!(s.re >= 0.0);
    }

    #[test]
    fn rotation_multiplies_values(alpha in -PI..PI, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let q = poly(&[0.5, 0.0, 1.0]);
        let r = q.rotated(alpha);
        let z = cx(re, im);
        prop_assume!(q.critical_distance(z) > 1e-3);
        let expected = q.eval(z).unwrap() * Complex64::from_polar(1.0, 2.0 * alpha);
        prop_assert!((r.eval(z).unwrap() - expected).norm() < 1e-12 * (1.0 + expected.norm()));
        prop_assert_eq!(r.zeros().len(), q.zeros().len());
    }

    #[test]
    fn length_is_additive(a in 1.5f64..2.5, b in 2.5f64..3.5, c in 3.5f64..4.5) {
        let q = poly(&[-1.0, 0.0, 1.0]);
        let (za, zb, zc) = (cx(a, 0.3), cx(b, -0.2), cx(c, 0.4));
        let whole = phi_length(&q, &[za, zb, zc]).unwrap();
        let parts = phi_length(&q, &[za, zb]).unwrap() + phi_length(&q, &[zb, zc]).unwrap();
        prop_assert!((whole - parts).abs() < 1e-10 * whole);
    }
}
