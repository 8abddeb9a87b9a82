//! Run classification, front speeds, drift offsets and profile errors.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbsolver::{Control, Observer, Snapshot, SolverState, Trajectory, TrajectoryRow};
use crate::model::ProblemSpec;
use crate::semiwave::SemiWaveProfile;

/// Shortest trajectory accepted by [`front_speed`].
pub const MIN_SPEED_SPAN: f64 = 20.0;
/// Shortest averaging window accepted by [`drift_offsets`].
pub const MIN_DRIFT_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Spreading,
    Vanishing,
    Undecided,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictKind::Spreading => "Spreading",
            VerdictKind::Vanishing => "Vanishing",
            VerdictKind::Undecided => "Undecided",
        };
        f.write_str(s)
    }
}

/// Numbers a verdict was based on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evidence {
    /// `pi / sqrt(f'(0) - d)`.
    pub critical_length: f64,
    pub max_length: f64,
    /// First recorded time at which the length reached the critical length.
    pub crossed_at: Option<f64>,
    pub final_length: f64,
    pub final_sup: f64,
    pub eps_vanish: f64,
    pub length_slack: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub eps_vanish: f64,
    /// Vanishing needs `final length < critical * (1 + length_slack)`.
    pub length_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_vanish: 1e-6, length_slack: 0.05 }
    }
}

/// Spreading once the habitat is at least the critical length (the fronts
/// are monotone, so this is final). Vanishing if the solution has decayed
/// below `eps_vanish` on a habitat shorter than the slackened critical length.
pub fn classify(rows: &[TrajectoryRow], spec: &ProblemSpec, thresholds: &Thresholds) -> Verdict {
    let critical = spec.reaction.critical_length();
    let mut max_length = f64::NEG_INFINITY;
    let mut crossed_at = None;
    for r in rows {
        let len = r.length();
        max_length = max_length.max(len);
        if crossed_at.is_none() && len >= critical {
            crossed_at = Some(r.t);
        }
    }
    let (final_length, final_sup, horizon) = rows
        .last()
        .map_or((f64::NAN, f64::NAN, 0.0), |r| (r.length(), r.sup_u, r.t));
    let kind = if crossed_at.is_some() {
        VerdictKind::Spreading
    } else if final_sup < thresholds.eps_vanish && final_length < critical * (1.0 + thresholds.length_slack) {
        VerdictKind::Vanishing
    } else {
        VerdictKind::Undecided
    };
    Verdict {
        kind,
        evidence: Evidence {
            critical_length: critical,
            max_length,
            crossed_at,
            final_length,
            final_sup,
            eps_vanish: thresholds.eps_vanish,
            length_slack: thresholds.length_slack,
            horizon,
        },
    }
}

/// Stops a run as soon as [`classify`] would return a verdict on the rows seen so far.
#[derive(Debug, Clone)]
pub struct VerdictObserver {
    critical: f64,
    thresholds: Thresholds,
    pub reached: Option<VerdictKind>,
}

impl VerdictObserver {
    pub fn new(spec: &ProblemSpec, thresholds: Thresholds) -> Self {
        VerdictObserver { critical: spec.reaction.critical_length(), thresholds, reached: None }
    }
}

impl Observer for VerdictObserver {
    fn observe(&mut self, _state: &SolverState, row: &TrajectoryRow) -> Control {
        let len = row.length();
        if len >= self.critical {
            self.reached = Some(VerdictKind::Spreading);
        } else if row.sup_u < self.thresholds.eps_vanish
            && len < self.critical * (1.0 + self.thresholds.length_slack)
        {
            self.reached = Some(VerdictKind::Vanishing);
        }
        if self.reached.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

fn trailing(rows: &[TrajectoryRow], window_fraction: f64) -> (&[TrajectoryRow], f64) {
    let (t0, t1) = (rows[0].t, rows[rows.len() - 1].t);
    let t_lo = t1 - window_fraction.clamp(0.0, 1.0) * (t1 - t0);
    let start = rows.partition_point(|r| r.t < t_lo);
    (&rows[start..], t1 - t_lo)
}

fn ls_slope(pts: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = pts.clone().count() as f64;
    let (st, sy) = pts.clone().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    num / den
}

/// Least-squares slope of `h(t)` over the trailing `window_fraction` of the run.
pub fn front_speed(rows: &[TrajectoryRow], window_fraction: f64) -> Result<f64> {
    let span = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    if span < MIN_SPEED_SPAN {
        return Err(Error::WindowTooShort { needed: MIN_SPEED_SPAN, available: span });
    }
    let (win, _) = trailing(rows, window_fraction);
    if win.len() < 2 {
        return Err(Error::WindowTooShort { needed: MIN_SPEED_SPAN, available: 0.0 });
    }
    Ok(ls_slope(win.iter().map(|r| (r.t, r.h))))
}

/// Long-time offsets of the fronts from the lines `+-c* t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    /// Mean of `h(t) - c* t`.
    pub h1: f64,
    /// Mean of `-(g(t) + c* t)`.
    pub g1: f64,
    pub window: (f64, f64),
    /// `|front speed over the window - c*|`.
    pub slope_residual: f64,
    /// Largest distance of either offset from its mean inside the window.
    pub max_deviation: f64,
}

/// Trailing-window drift offsets of a spreading run.
pub fn drift_offsets(
    rows: &[TrajectoryRow],
    spec: &ProblemSpec,
    cstar: f64,
    window_fraction: f64,
) -> Result<DriftEstimate> {
    if classify(rows, spec, &Thresholds::default()).kind != VerdictKind::Spreading {
        return Err(Error::NotSpreading);
    }
    let (win, width) = trailing(rows, window_fraction);
    if width < MIN_DRIFT_WINDOW || win.len() < 2 {
        return Err(Error::WindowTooShort { needed: MIN_DRIFT_WINDOW, available: width });
    }
    let n = win.len() as f64;
    let h1 = win.iter().map(|r| r.h - cstar * r.t).sum::<f64>() / n;
    let g1 = win.iter().map(|r| -(r.g + cstar * r.t)).sum::<f64>() / n;
    let max_deviation = win
        .iter()
        .map(|r| ((r.h - cstar * r.t) - h1).abs().max((-(r.g + cstar * r.t) - g1).abs()))
        .fold(0.0, f64::max);
    let slope = ls_slope(win.iter().map(|r| (r.t, r.h)));
    Ok(DriftEstimate {
        h1,
        g1,
        window: (win[0].t, win[win.len() - 1].t),
        slope_residual: (slope - cstar).abs(),
        max_deviation,
    })
}

/// `sup |u(t, x) - q(c t + H1 - x)|` over the snapshot nodes with `0 <= x <= h(t)`.
pub fn profile_error(snapshot: &Snapshot, profile: &SemiWaveProfile, h1: f64) -> f64 {
    let shift = profile.c * snapshot.t + h1;
    (0..=snapshot.n_cells())
        .map(|j| (snapshot.x(j), snapshot.w[j]))
        .filter(|&(x, _)| x >= 0.0 && x <= snapshot.h)
        .map(|(x, w)| (w - profile.value_at(shift - x)).abs())
        .fold(0.0, f64::max)
}

/// `(t, error)` for each snapshot.
pub fn profile_error_series(snapshots: &[Snapshot], profile: &SemiWaveProfile, h1: f64) -> Vec<(f64, f64)> {
    snapshots.iter().map(|s| (s.t, profile_error(s, profile, h1))).collect()
}

pub fn write_profile_error_csv(path: &Path, series: &[(f64, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["t", "error"])?;
    for &(t, e) in series {
        wtr.write_record([t.to_string(), e.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Outcome of checking that run A stays above run B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingReport {
    pub tol: f64,
    pub shared_rows: usize,
    pub shared_snapshots: usize,
    /// Largest `h_B - h_A`.
    pub worst_h: f64,
    /// Largest `g_A - g_B`.
    pub worst_g: f64,
    /// Largest `u_B - u_A`.
    pub worst_u: f64,
    /// Time of the largest of the three.
    pub worst_t: f64,
    pub violations: usize,
}

impl OrderingReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn worst(&self) -> f64 {
        self.worst_h.max(self.worst_g).max(self.worst_u)
    }
}

/// Largest `b - a` between the piecewise-linear reconstructions, checked at
/// the nodes of both grids.
fn max_excess(a: &Snapshot, b: &Snapshot) -> f64 {
    let at_b = (0..=b.n_cells()).map(|j| b.w[j] - a.value_at(b.x(j)));
    let at_a = (0..=a.n_cells()).map(|j| b.value_at(a.x(j)) - a.w[j]);
    at_b.chain(at_a).fold(f64::NEG_INFINITY, f64::max)
}

fn same_time(s: f64, t: f64) -> bool {
    (s - t).abs() <= 1e-9 * s.abs().max(t.abs()).max(1.0)
}

/// Checks `h_A >= h_B - tol`, `g_A <= g_B + tol` at every shared row time and
/// `u_A >= u_B - tol` at every shared snapshot time.
///
/// Fails with `ConfigMismatch` when the grids differ or the initial data of A
/// do not dominate those of B.
pub fn compare_runs(a: &Trajectory, b: &Trajectory, tol: f64) -> Result<OrderingReport> {
    let (a0, b0) = match (a.snapshots.first(), b.snapshots.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::ConfigMismatch("both runs need an initial snapshot".into())),
    };
    if a0.n_cells() != b0.n_cells() {
        return Err(Error::ConfigMismatch(format!(
            "grids differ: {} vs {} cells",
            a0.n_cells(),
            b0.n_cells()
        )));
    }
    if !same_time(a0.t, b0.t) {
        return Err(Error::ConfigMismatch("runs start at different times".into()));
    }
    if a0.g > b0.g + tol || a0.h < b0.h - tol || max_excess(a0, b0) > tol {
        return Err(Error::ConfigMismatch(
            "initial data of the first run do not dominate the second".into(),
        ));
    }

    let mut rep = OrderingReport {
        tol,
        shared_rows: 0,
        shared_snapshots: 0,
        worst_h: f64::NEG_INFINITY,
        worst_g: f64::NEG_INFINITY,
        worst_u: f64::NEG_INFINITY,
        worst_t: a0.t,
        violations: 0,
    };
    let mut j = 0;
    for ra in &a.rows {
        while j < b.rows.len() && b.rows[j].t < ra.t && !same_time(b.rows[j].t, ra.t) {
            j += 1;
        }
        if j == b.rows.len() {
            break;
        }
        let rb = &b.rows[j];
        if !same_time(ra.t, rb.t) {
            continue;
        }
        rep.shared_rows += 1;
        let before = rep.worst();
        rep.worst_h = rep.worst_h.max(rb.h - ra.h);
        rep.worst_g = rep.worst_g.max(ra.g - rb.g);
        if rb.h - ra.h > tol || ra.g - rb.g > tol {
            rep.violations += 1;
        }
        if rep.worst() > before {
            rep.worst_t = ra.t;
        }
    }
    for sa in &a.snapshots {
        if let Some(sb) = b.snapshots.iter().find(|s| same_time(s.t, sa.t)) {
            rep.shared_snapshots += 1;
            let before = rep.worst();
            let ex = max_excess(sa, sb);
            rep.worst_u = rep.worst_u.max(ex);
            if ex > tol {
                rep.violations += 1;
            }
            if rep.worst() > before {
                rep.worst_t = sa.t;
            }
        }
    }
    Ok(rep)
}
