use std::sync::OnceLock;

use kpp_stefan::characteristic::c0;
use kpp_stefan::diagnostics::{
    classify, compare_runs, drift_offsets, front_speed, profile_error_series, Thresholds, VerdictKind,
    VerdictObserver,
};
use kpp_stefan::fbsolver::{init_state, run, simulate, NumericsConfig, Trajectory};
use kpp_stefan::model::{make_reaction, validate_history, FamilyId, InitialHistory, ProblemSpec, RawHistory};
use kpp_stefan::semiwave::{cstar, SpeedResult};

fn spec() -> ProblemSpec {
    let r = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0).unwrap();
    ProblemSpec::new(r, 1.0, 1.0).unwrap()
}

fn cosine(spec: &ProblemSpec, h0: f64, amp: f64) -> InitialHistory {
    validate_history(spec, RawHistory::cosine(spec.tau, -h0, h0, amp, 3, 201)).unwrap()
}

fn speed() -> &'static SpeedResult {
    static CELL: OnceLock<SpeedResult> = OnceLock::new();
    CELL.get_or_init(|| cstar(&spec(), None).unwrap())
}

/// One spreading run shared by the long-time tests.
fn spreading() -> &'static Trajectory {
    static CELL: OnceLock<Trajectory> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = spec();
        let mut num = NumericsConfig::auto_with(&s, 4.0, 100.0, 200, 64);
        num.snapshot_every = 10.0;
        simulate(&s, &cosine(&s, 2.0, 0.5), &num).unwrap()
    })
}

fn verdict(half_length: f64, amp: f64) -> VerdictKind {
    let s = spec();
    let hist = cosine(&s, half_length, amp);
    let num = NumericsConfig::auto_with(&s, 2.0 * half_length, 200.0, 60, 32);
    let mut state = init_state(&s, &hist, &num).unwrap();
    let mut obs = VerdictObserver::new(&s, Thresholds::default());
    let traj = run(&mut state, &s, &num, &mut [&mut obs]).unwrap();
    classify(&traj.rows, &s, &Thresholds::default()).kind
}

#[test]
fn classify_reference_cases() {
    assert_eq!(verdict(1.65, 0.5), VerdictKind::Spreading);
    assert_eq!(verdict(0.75, 1e-3), VerdictKind::Vanishing);
}

#[test]
fn classification_is_monotone_in_the_data() {
    let lengths = [0.75, 1.25, 1.75];
    let amps = [1e-3, 0.1, 1.0];
    let grid: Vec<Vec<VerdictKind>> = lengths
        .iter()
        .map(|&l| amps.iter().map(|&a| verdict(l, a)).collect())
        .collect();
    let rank = |k: VerdictKind| match k {
        VerdictKind::Vanishing => 0,
        VerdictKind::Undecided => 1,
        VerdictKind::Spreading => 2,
    };
    for i in 0..3 {
        for j in 0..3 {
            assert_ne!(grid[i][j], VerdictKind::Undecided, "{grid:?}");
            if i > 0 {
                assert!(rank(grid[i][j]) >= rank(grid[i - 1][j]), "{grid:?}");
            }
            if j > 0 {
                assert!(rank(grid[i][j]) >= rank(grid[i][j - 1]), "{grid:?}");
            }
        }
    }
    assert_eq!(grid[2][2], VerdictKind::Spreading);
    assert_eq!(grid[0][0], VerdictKind::Vanishing);
}

#[test]
fn vanishing_runs_stay_below_critical_length() {
    let s = spec();
    let hist = cosine(&s, 0.75, 1e-3);
    let num = NumericsConfig::auto_with(&s, 1.5, 100.0, 60, 32);
    let traj = simulate(&s, &hist, &num).unwrap();
    let v = classify(&traj.rows, &s, &Thresholds::default());
    assert_eq!(v.kind, VerdictKind::Vanishing);
    assert!(v.evidence.max_length < s.reaction.critical_length());
    assert!(v.evidence.crossed_at.is_none());
}

#[test]
fn measured_speed_approaches_cstar_below_c0() {
    let traj = spreading();
    let c = front_speed(&traj.rows, 0.5).unwrap();
    let target = speed().cstar;
    assert!((c - target).abs() / target < 0.03, "{c} vs {target}");
    assert!(c < c0(1.0, 2.0, 1.0).unwrap());
}

#[test]
fn average_speed_error_shrinks_as_time_doubles() {
    let traj = spreading();
    let target = speed().cstar;
    let at = |t: f64| {
        let r = traj.rows.iter().find(|r| r.t >= t - 1e-9).unwrap();
        (r.h / r.t - target).abs()
    };
    let errs = [at(25.0), at(50.0), at(100.0)];
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn symmetric_data_give_equal_offsets() {
    let s = spec();
    let d = drift_offsets(&spreading().rows, &s, speed().cstar, 0.5).unwrap();
    assert!((d.h1 - d.g1).abs() < 0.02 * d.h1.abs(), "{d:?}");
}

#[test]
fn offsets_settle_as_the_window_moves_later() {
    let s = spec();
    let rows = &spreading().rows;
    let c = speed().cstar;
    // later windows pick up the O(dx^2) speed error of the fixed grid
    let devs: Vec<f64> = [30.0, 40.0, 50.0]
        .iter()
        .map(|&end| {
            let upto: Vec<_> = rows.iter().copied().filter(|r| r.t <= end + 1e-9).collect();
            drift_offsets(&upto, &s, c, 20.0 / end).unwrap().max_deviation
        })
        .collect();
    assert!(devs[1] < devs[0] && devs[2] < devs[1], "{devs:?}");
}

#[test]
fn profile_error_decreases_over_snapshots() {
    let s = spec();
    let traj = spreading();
    let d = drift_offsets(&traj.rows, &s, speed().cstar, 0.5).unwrap();
    let series = profile_error_series(&traj.snapshots, &speed().profile, d.h1);
    let late: Vec<f64> = series.iter().filter(|(t, _)| *t >= 20.0 && *t <= 60.0).map(|p| p.1).collect();
    assert!(late.len() >= 4);
    for w in late.windows(2) {
        assert!(w[1] <= w[0], "{series:?}");
    }
}

#[test]
fn halved_amplitude_stays_below() {
    let s = spec();
    let mut num = NumericsConfig::auto_with(&s, 4.0, 20.0, 100, 64);
    num.adapt_dt = false;
    num.snapshot_every = 2.0;
    let a = simulate(&s, &cosine(&s, 2.0, 0.5), &num).unwrap();
    let b = simulate(&s, &cosine(&s, 2.0, 0.25), &num).unwrap();
    let report = compare_runs(&a, &b, 1e-6).unwrap();
    assert!(report.holds(), "{report:?}");
    assert!(report.shared_snapshots >= 10);
}
