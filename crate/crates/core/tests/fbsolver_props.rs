use std::f64::consts::PI;

use kpp_stefan::diagnostics::compare_runs;
use kpp_stefan::fbsolver::{init_state, run, simulate, Control, NumericsConfig, SolverState, Trajectory, TrajectoryRow};
use kpp_stefan::model::{make_reaction, validate_history, FamilyId, InitialHistory, ProblemSpec, RawHistory};
use proptest::prelude::*;

fn bh(tau: f64, mu: f64) -> ProblemSpec {
    let r = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0).unwrap();
    ProblemSpec::new(r, tau, mu).unwrap()
}

fn cosine(spec: &ProblemSpec, h0: f64, amp: f64, n_points: usize) -> InitialHistory {
    validate_history(spec, RawHistory::cosine(spec.tau, -h0, h0, amp, 3, n_points)).unwrap()
}

fn check_invariants(spec: &ProblemSpec, traj: &Trajectory) {
    let ustar = spec.ustar();
    for s in &traj.snapshots {
        assert!(s.w.iter().all(|&v| (0.0..=ustar + 1e-8).contains(&v)));
        assert_eq!(s.w[0], 0.0);
        assert_eq!(*s.w.last().unwrap(), 0.0);
    }
    for w in traj.rows.windows(2) {
        assert!(w[1].h >= w[0].h && w[1].g <= w[0].g, "fronts receded at t = {}", w[1].t);
        assert!(w[1].t > w[0].t);
    }
    // nesting: the habitat at t - tau lies inside the one at t
    let t0 = traj.rows[0].t;
    let mut lag = 0;
    for row in &traj.rows {
        while traj.rows[lag + 1].t <= row.t - spec.tau + 1e-9 && lag + 1 < traj.rows.len() - 1 {
            lag += 1;
        }
        if row.t - spec.tau >= t0 {
            let past = &traj.rows[lag];
            assert!(past.g >= row.g - 1e-12 && past.h <= row.h + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn runs_keep_bounds_monotone_fronts_and_nesting(
        tau in 0.0f64..2.0, h0 in 0.8f64..3.0, amp in 0.05f64..1.0, mu in 0.2f64..3.0,
    ) {
        let spec = bh(tau, mu);
        let hist = cosine(&spec, h0, amp, 101);
        let mut num = NumericsConfig::auto_with(&spec, 2.0 * h0, 6.0, 40, 64);
        num.snapshot_every = 0.5;
        let mut state = init_state(&spec, &hist, &num).unwrap();
        let k = state.tau_steps();
        let mut buffer_ok = true;
        let mut watch = |s: &SolverState, _: &TrajectoryRow| {
            buffer_ok &= s.history_len() == s.tau_steps() + 1 && s.tau_steps() <= k.max(1);
            Control::Continue
        };
        let traj = run(&mut state, &spec, &num, &mut [&mut watch]).unwrap();
        prop_assert!(buffer_ok);
        check_invariants(&spec, &traj);
    }
}

#[test]
fn front_position_converges_under_refinement() {
    let spec = bh(1.0, 1.0);
    let hist = cosine(&spec, 2.0, 0.5, 801);
    let h_at = |n: usize| {
        let num = NumericsConfig::with_dt(&spec, n, 1.0 / 256.0, 5.0).unwrap();
        simulate(&spec, &hist, &num).unwrap().last().unwrap().h
    };
    let (a, b, c) = (h_at(40), h_at(80), h_at(160));
    let order = ((a - b).abs() / (b - c).abs()).log2();
    assert!(order >= 0.8, "order {order}: {a} {b} {c}");
}

/// Dense Gaussian elimination, kept separate from the library's Thomas solver.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            if m == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    b
}

/// Front-fixed implicit step for the undelayed logistic equation
/// `u_t = u_xx + u (1 - u)` written from scratch.
fn logistic_reference(n: usize, dt: f64, steps: usize, h0: f64, amp: f64, mu: f64) -> (f64, f64, Vec<f64>) {
    let dy = 1.0 / n as f64;
    let (mut g, mut h) = (-h0, h0);
    let mut w: Vec<f64> = (0..=n)
        .map(|j| {
            if j == 0 || j == n {
                0.0
            } else {
                let x = g + (h - g) * j as f64 / n as f64;
                amp * (PI * x / (2.0 * h0)).cos()
            }
        })
        .collect();
    for _ in 0..steps {
        let len = h - g;
        let gp = -mu * (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dy) / len;
        let hp = -mu * (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * dy) / len;
        let (g1, h1) = (g + dt * gp, h + dt * hp);
        let l1 = h1 - g1;
        let diff = 1.0 / (l1 * dy).powi(2);
        let m = n - 1;
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for i in 0..m {
            let j = i + 1;
            let y = j as f64 * dy;
            let adv = (gp + y * (hp - gp)) / l1;
            let (lo, up) = if adv.abs() <= 2.0 * diff * dy {
                (diff - adv / (2.0 * dy), diff + adv / (2.0 * dy))
            } else if adv > 0.0 {
                (diff, diff + adv / dy)
            } else {
                (diff - adv / dy, diff)
            };
            a[i][i] = 1.0 + dt * (lo + up);
            if i > 0 {
                a[i][i - 1] = -dt * lo;
            }
            if i + 1 < m {
                a[i][i + 1] = -dt * up;
            }
            let s = w[j];
            b[i] = s + dt * (2.0 * s - s * s - s);
        }
        let x = dense_solve(a, b);
        for i in 0..m {
            w[i + 1] = x[i].clamp(0.0, 1.0);
        }
        g = g1;
        h = h1;
    }
    (g, h, w)
}

#[test]
fn undelayed_logistic_matches_reference_stepper() {
    let r = make_reaction(FamilyId::LogisticDeath { r: 1.0 }, 1.0).unwrap();
    let spec = ProblemSpec::new(r, 0.0, 1.5).unwrap();
    let (n, h0, amp) = (50, 2.0, 0.6);
    let hist = cosine(&spec, h0, amp, n + 1);
    let mut num = NumericsConfig::with_dt(&spec, n, 0.01, 3.0).unwrap();
    num.snapshot_every = 0.0;
    let traj = simulate(&spec, &hist, &num).unwrap();
    let steps = traj.rows.len() - 1;
    assert_eq!(steps, 300);
    let (g, h, w) = logistic_reference(n, 0.01, steps, h0, amp, 1.5);
    let end = traj.snapshots.last().unwrap();
    assert!((end.g - g).abs() < 1e-10 && (end.h - h).abs() < 1e-10, "{} {} vs {g} {h}", end.g, end.h);
    let worst = end.w.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "max nodal gap {worst}");
}

#[test]
fn larger_data_stay_above() {
    let spec = bh(1.0, 1.0);
    let a = cosine(&spec, 2.0, 0.6, 201);
    let b = cosine(&spec, 1.5, 0.3, 201);
    let mut num = NumericsConfig::auto_with(&spec, 4.0, 15.0, 100, 64);
    num.adapt_dt = false;
    num.snapshot_every = 1.0;
    let ta = simulate(&spec, &a, &num).unwrap();
    let tb = simulate(&spec, &b, &num).unwrap();
    let report = compare_runs(&ta, &tb, 1e-6).unwrap();
    assert!(report.holds(), "{report:?}");
    assert!(report.shared_rows == ta.rows.len());
}

#[test]
fn small_habitat_vanishes() {
    let spec = bh(1.0, 1.0);
    let hist = cosine(&spec, 0.75, 1e-3, 101);
    let num = NumericsConfig::auto_with(&spec, 1.5, 40.0, 100, 64);
    let traj = simulate(&spec, &hist, &num).unwrap();
    let tail = &traj.rows[traj.rows.len() / 2..];
    for w in tail.windows(2) {
        assert!(w[1].sup_u <= w[0].sup_u + 1e-15);
    }
    let last = traj.last().unwrap();
    assert!(last.sup_u < 1e-6, "sup {}", last.sup_u);
    assert!(last.length() < spec.reaction.critical_length());
}

#[test]
fn large_habitat_spreads() {
    let spec = bh(1.0, 1.0);
    let hist = cosine(&spec, 1.65, 0.5, 201);
    let num = NumericsConfig::auto_with(&spec, 3.3, 30.0, 100, 64);
    let traj = simulate(&spec, &hist, &num).unwrap();
    let last = traj.last().unwrap();
    assert!(last.h > 5.0 && last.g < -5.0, "{last:?}");
    assert!(last.sup_u > 0.9);
}
