use std::f64::consts::PI;

use kpp_stefan::characteristic::{
    c0, complex_root_in_omega, default_continuation_steps, delta, min_real_root, CharacteristicQuery,
};
use num_complex::Complex64;
use proptest::prelude::*;

const FP0: f64 = 2.0;
const D: f64 = 1.0;

fn real_delta(c: f64, tau: f64, lambda: f64) -> f64 {
    lambda * lambda - c * lambda - D + FP0 * (-lambda * c * tau).exp()
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    f(0.5 * (a + b))
}

/// Scan c in steps of 1e-4 and report the first grid speed at which the
/// minimum over lambda turns nonpositive, refined by linear interpolation.
fn dense_c0(tau: f64) -> f64 {
    let min_at = |c: f64| golden_min(|l| real_delta(c, tau, l), 0.0, 10.0);
    let mut prev_c = 1e-3;
    let mut prev = min_at(prev_c);
    let mut c = prev_c;
    while c < 2.0 {
        c += 1e-4;
        let m = min_at(c);
        if m <= 0.0 {
            return prev_c + (c - prev_c) * prev / (prev - m);
        }
        prev_c = c;
        prev = m;
    }
    2.0
}

#[test]
fn c0_matches_dense_scan_oracle() {
    let oracle = dense_c0(1.0);
    let got = c0(1.0, FP0, D).unwrap();
    assert!((got - oracle).abs() < 1e-5, "c0 = {got}, oracle = {oracle}");
}

#[test]
fn c0_without_delay_is_closed_form() {
    assert!((c0(0.0, FP0, D).unwrap() - 2.0).abs() < 1e-8);
    assert!((c0(0.0, 5.0, 1.0).unwrap() - 4.0).abs() < 1e-8);
}

#[test]
fn c0_is_nonincreasing_in_delay() {
    let taus: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let vals: Vec<f64> = taus.iter().map(|&t| c0(t, FP0, D).unwrap()).collect();
    for w in vals.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{vals:?}");
    }
}

#[test]
fn real_root_exists_exactly_from_c0_on() {
    for tau in [0.0, 0.5, 1.0] {
        let c0v = c0(tau, FP0, D).unwrap();
        for k in 1..=50 {
            let c = 2.0 * c0v * k as f64 / 50.0;
            if (c - c0v).abs() < 1e-6 {
                continue;
            }
            let q = CharacteristicQuery::new(c, tau, FP0, D).unwrap();
            match min_real_root(&q) {
                Some(l) => {
                    assert!(c > c0v, "root at c = {c} < c0 = {c0v}");
                    assert!(l > 0.0 && real_delta(c, tau, l).abs() < 1e-10);
                }
                None => assert!(c < c0v, "no root at c = {c} > c0 = {c0v}"),
            }
        }
    }
}

/// Minimum of |Delta| over a grid of Omega, then complex Newton.
fn grid_newton_root(c: f64, tau: f64) -> Complex64 {
    let q = CharacteristicQuery::new(c, tau, FP0, D).unwrap();
    let bmax = PI / (c * tau);
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for i in 1..200 {
        for j in 1..200 {
            let l = Complex64::new(3.0 * i as f64 / 200.0, bmax * j as f64 / 200.0);
            let v = delta(&q, l).norm();
            if v < best.0 {
                best = (v, l);
            }
        }
    }
    let mut l = best.1;
    for _ in 0..50 {
        let e = (-l * c * tau).exp();
        let f = l * l - c * l - D + FP0 * e;
        let df = 2.0 * l - c - FP0 * c * tau * e;
        l -= f / df;
    }
    l
}

#[test]
fn complex_root_matches_grid_newton_oracle() {
    let (c, tau) = (0.5, 1.0);
    let oracle = grid_newton_root(c, tau);
    let root = complex_root_in_omega(c, tau, FP0, D, default_continuation_steps(tau)).unwrap();
    assert!((root.lambda() - oracle).norm() < 1e-8, "{root:?} vs {oracle}");
    assert!(root.alpha > 0.0 && root.beta > 0.0 && root.beta < PI / (c * tau));
    assert!(root.residual < 1e-10);
}

#[test]
fn complex_root_continues_from_closed_form() {
    let c = 0.8;
    let start = Complex64::new(c / 2.0, (4.0 * (FP0 - D) - c * c).sqrt() / 2.0);
    let small = complex_root_in_omega(c, 1e-3, FP0, D, 50).unwrap();
    assert!((small.lambda() - start).norm() < 1e-2);
}

proptest! {
    #[test]
    fn delta_is_convex_on_the_real_axis(
        c in 0.0f64..3.0, tau in 0.0f64..3.0,
        a in 0.0f64..5.0, b in 0.0f64..5.0, t in 0.0f64..1.0,
    ) {
        let q = CharacteristicQuery::new(c, tau, FP0, D).unwrap();
        let mid = q.real(t * a + (1.0 - t) * b);
        let chord = t * q.real(a) + (1.0 - t) * q.real(b);
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn delta_decreases_in_speed(
        c1 in 0.0f64..3.0, dc in 1e-3f64..1.0, tau in 0.0f64..3.0, l in 1e-3f64..5.0,
    ) {
        let a = CharacteristicQuery::new(c1, tau, FP0, D).unwrap().real(l);
        let b = CharacteristicQuery::new(c1 + dc, tau, FP0, D).unwrap().real(l);
        prop_assert!(b < a);
    }

    #[test]
    fn delta_has_conjugate_symmetry(
        c in 0.0f64..3.0, tau in 0.0f64..3.0, re in -2.0f64..5.0, im in -5.0f64..5.0,
    ) {
        let q = CharacteristicQuery::new(c, tau, FP0, D).unwrap();
        let l = Complex64::new(re, im);
        let lhs = delta(&q, l.conj());
        let rhs = delta(&q, l).conj();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }
}
