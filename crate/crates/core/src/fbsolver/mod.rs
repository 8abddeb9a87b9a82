//! Time stepping of the delayed free-boundary problem.
//!
//! The moving habitat `[g(t), h(t)]` is mapped onto `y in [0, 1]` by
//! `y = (x - g) / (h - g)`. In these coordinates `w(t, y) = u(t, x)` solves
//!
//! ```text
//! w_t = w_yy / l^2 + (g' + y l') / l * w_y - d w + f(u(t - tau, x)),   l = h - g
//! ```
//!
//! Each step advances the fronts explicitly from one-sided boundary gradients,
//! then solves the interior implicitly on the new habitat with the reaction
//! taken from the record one delay back, looked up at fixed physical `x`.

mod trajectory;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{InitialHistory, ProblemSpec};
use crate::tridiag;

pub use trajectory::{Snapshot, Trajectory, TrajectoryRow, TRAJECTORY_HEADER};

pub const DEFAULT_N_CELLS: usize = 400;
pub const DEFAULT_MAX_TAU_STEPS: usize = 1024;

/// Relative growth of `sup w` per step that counts as blow-up.
const STABILITY_FACTOR: f64 = 1.1;

/// Discretisation parameters of a run.
///
/// `tau_steps * dt == tau` always holds; with `adapt_dt` the step doubles
/// (and `tau_steps` halves) while the physical cell size allows it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NumericsConfig {
    pub n_cells: usize,
    pub dt: f64,
    pub tau_steps: usize,
    pub boundary_stencil_order: u8,
    pub t_end: f64,
    /// Time between stored snapshots; 0 keeps only the first and last.
    pub snapshot_every: f64,
    pub adapt_dt: bool,
    /// Upper bound for adapted steps.
    pub dt_max: f64,
}

fn pow2_at_least(x: f64, cap: usize) -> usize {
    let mut k = 1usize;
    while (k as f64) < x && k < cap {
        k *= 2;
    }
    k
}

impl NumericsConfig {
    /// Defaults for a habitat of the given initial length: `n_cells = 400`,
    /// `dt ~ min(0.2 dx^2, 0.1 / Lip)` with `tau / dt` a power of two.
    pub fn auto(spec: &ProblemSpec, initial_length: f64, t_end: f64) -> Self {
        Self::auto_with(spec, initial_length, t_end, DEFAULT_N_CELLS, DEFAULT_MAX_TAU_STEPS)
    }

    pub fn auto_with(
        spec: &ProblemSpec,
        initial_length: f64,
        t_end: f64,
        n_cells: usize,
        max_tau_steps: usize,
    ) -> Self {
        let lip = spec.reaction.lipschitz.max(1e-12);
        let dx = initial_length / n_cells as f64;
        let dt_diff = 0.2 * dx * dx;
        let dt_lip = 0.1 / lip;
        let (dt, tau_steps) = if spec.tau > 0.0 {
            let k_lip = pow2_at_least(spec.tau / dt_lip, usize::MAX / 2);
            let k_diff = pow2_at_least(spec.tau / dt_diff, max_tau_steps.max(1));
            let k = k_lip.max(k_diff);
            (spec.tau / k as f64, k)
        } else {
            (dt_diff.min(dt_lip), 0)
        };
        NumericsConfig {
            n_cells,
            dt,
            tau_steps,
            boundary_stencil_order: 2,
            t_end,
            snapshot_every: 0.0,
            adapt_dt: true,
            dt_max: dt_lip,
        }
    }

    /// A fixed step. When `tau` is not a multiple of `dt` the step is shrunk to
    /// the nearest `tau / k` and a warning is logged.
    pub fn with_dt(spec: &ProblemSpec, n_cells: usize, dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        let lip = spec.reaction.lipschitz.max(1e-12);
        let (dt_used, tau_steps) = if spec.tau > 0.0 {
            let k = (spec.tau / dt).round().max(1.0) as usize;
            let adjusted = spec.tau / k as f64;
            if (adjusted - dt).abs() > 1e-12 * dt {
                log::warn!("dt = {dt} does not divide tau = {}; using dt = {adjusted}", spec.tau);
            }
            (adjusted, k)
        } else {
            (dt, 0)
        };
        let cfg = NumericsConfig {
            n_cells,
            dt: dt_used,
            tau_steps,
            boundary_stencil_order: 2,
            t_end,
            snapshot_every: 0.0,
            adapt_dt: false,
            dt_max: 0.1 / lip,
        };
        cfg.validate(spec)?;
        Ok(cfg)
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if self.n_cells < 4 {
            return Err(Error::InvalidParameter(format!(
                "n_cells must be >= 4, got {}",
                self.n_cells
            )));
        }
        if !matches!(self.boundary_stencil_order, 1 | 2) {
            return Err(Error::InvalidParameter(format!(
                "boundary_stencil_order must be 1 or 2, got {}",
                self.boundary_stencil_order
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.snapshot_every >= 0.0) {
            return Err(Error::InvalidParameter("snapshot_every must be >= 0".into()));
        }
        if spec.tau > 0.0 {
            if self.tau_steps == 0 || (self.tau_steps as f64 * self.dt - spec.tau).abs() > 1e-12 * spec.tau {
                return Err(Error::InvalidParameter(format!(
                    "tau_steps * dt = {} must equal tau = {}",
                    self.tau_steps as f64 * self.dt,
                    spec.tau
                )));
            }
        } else if self.tau_steps != 0 {
            return Err(Error::InvalidParameter("tau_steps must be 0 when tau = 0".into()));
        }
        if self.dt * spec.reaction.lipschitz >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "dt * Lip(f) = {} must be < 0.5",
                self.dt * spec.reaction.lipschitz
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Record {
    t: f64,
    g: f64,
    h: f64,
    w: Vec<f64>,
}

impl Record {
    fn value_at(&self, x: f64) -> f64 {
        let len = self.h - self.g;
        let y = (x - self.g) / len;
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        let n = self.w.len() - 1;
        let s = y * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let frac = s - j as f64;
        self.w[j] * (1.0 - frac) + self.w[j + 1] * frac
    }
}

#[derive(Debug, Clone, Default)]
struct Workspace {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

/// Which front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Current solution plus the delay buffer.
///
/// Time is kept as an integer tick count in units of the initial step so that
/// runs sharing a configuration produce bit-identical time columns.
#[derive(Debug, Clone)]
pub struct SolverState {
    t: f64,
    g: f64,
    h: f64,
    w: Vec<f64>,
    gprime: f64,
    hprime: f64,
    ticks: u64,
    dt_ticks: u64,
    base_dt: f64,
    dt: f64,
    tau_steps: usize,
    steps: u64,
    history: VecDeque<Record>,
    work: Workspace,
}

impl SolverState {
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn length(&self) -> f64 {
        self.h - self.g
    }
    /// Values on `y_j = j / n_cells`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn gprime(&self) -> f64 {
        self.gprime
    }
    pub fn hprime(&self) -> f64 {
        self.hprime
    }
    pub fn n_cells(&self) -> usize {
        self.w.len() - 1
    }
    /// Step currently in use.
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Steps per delay at the current `dt`.
    pub fn tau_steps(&self) -> usize {
        self.tau_steps
    }
    pub fn steps_taken(&self) -> u64 {
        self.steps
    }
    pub fn sup(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max)
    }
    pub fn history_len(&self) -> usize {
        self.history.len()
    }
    /// `(t, g, h, w)` of buffered record `k`, oldest first.
    pub fn history_record(&self, k: usize) -> (f64, f64, f64, &[f64]) {
        let r = &self.history[k];
        (r.t, r.g, r.h, &r.w)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { t: self.t, g: self.g, h: self.h, w: self.w.clone() }
    }

    pub fn row(&self) -> TrajectoryRow {
        TrajectoryRow {
            t: self.t,
            g: self.g,
            h: self.h,
            gprime: self.gprime,
            hprime: self.hprime,
            sup_u: self.sup(),
        }
    }
}

/// Resamples the history onto the reference grid at `-tau, -tau + dt, ..., 0`.
pub fn init_state(spec: &ProblemSpec, history: &InitialHistory, numerics: &NumericsConfig) -> Result<SolverState> {
    numerics.validate(spec)?;
    let n = numerics.n_cells;
    let k_steps = numerics.tau_steps;
    let ustar = spec.ustar();
    let mut records = VecDeque::with_capacity(k_steps + 1);
    for k in 0..=k_steps {
        let theta = if k == k_steps { 0.0 } else { -spec.tau + k as f64 * numerics.dt };
        let frame = history.at(theta);
        let (g, h) = frame.domain();
        let mut w = vec![0.0; n + 1];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let x = g + (h - g) * j as f64 / n as f64;
            *wj = frame.value(x).clamp(0.0, ustar);
        }
        records.push_back(Record { t: theta, g, h, w });
    }
    let current = records.back().expect("at least one record").clone();
    let mut state = SolverState {
        t: 0.0,
        g: current.g,
        h: current.h,
        w: current.w,
        gprime: 0.0,
        hprime: 0.0,
        ticks: 0,
        dt_ticks: 1,
        base_dt: numerics.dt,
        dt: numerics.dt,
        tau_steps: k_steps,
        steps: 0,
        history: records,
        work: Workspace::default(),
    };
    state.gprime = -spec.mu * front_gradient(&state, Side::Left, numerics.boundary_stencil_order);
    state.hprime = -spec.mu * front_gradient(&state, Side::Right, numerics.boundary_stencil_order);
    Ok(state)
}

/// `u(t - tau, x)` from the oldest buffered record, zero outside its habitat.
pub fn delay_lookup(state: &SolverState, x: f64) -> f64 {
    state.history.front().map_or(0.0, |r| r.value_at(x))
}

/// One-sided `u_x` at a front, in physical units.
pub fn front_gradient(state: &SolverState, side: Side, order: u8) -> f64 {
    let w = &state.w;
    let n = w.len() - 1;
    let dy = 1.0 / n as f64;
    let wy = match (side, order) {
        (Side::Left, 1) => (w[1] - w[0]) / dy,
        (Side::Left, _) => (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dy),
        (Side::Right, 1) => (w[n] - w[n - 1]) / dy,
        (Side::Right, _) => (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * dy),
    };
    wy / (state.h - state.g)
}

/// Advances one step of the current `dt`.
pub fn step(state: &mut SolverState, spec: &ProblemSpec, numerics: &NumericsConfig) -> Result<()> {
    let n = state.n_cells();
    let dt = state.dt;
    let dy = 1.0 / n as f64;
    let order = numerics.boundary_stencil_order;
    let d = spec.reaction.d;
    let ustar = spec.ustar();

    let gp = -spec.mu * front_gradient(state, Side::Left, order);
    let hp = -spec.mu * front_gradient(state, Side::Right, order);
    let (g_old, len_old) = (state.g, state.h - state.g);
    let g_new = state.g + dt * gp;
    let h_new = state.h + dt * hp;
    let len = h_new - g_new;
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::StabilityFailure { t: state.t, before: len_old, after: len });
    }

    let m = n - 1;
    let work = &mut state.work;
    for v in [&mut work.lower, &mut work.diag, &mut work.upper, &mut work.rhs, &mut work.scratch] {
        v.resize(m, 0.0);
    }
    let oldest = state.history.front().expect("history is never empty");
    let sup_delayed = oldest.w.iter().copied().fold(0.0, f64::max);
    let diff = 1.0 / (len * len * dy * dy);
    let lprime = hp - gp;
    for i in 0..m {
        let j = i + 1;
        let y = j as f64 * dy;
        let x_old = g_old + len_old * y;
        let source = spec.reaction.f(oldest.value_at(x_old)) - d * state.w[j];
        work.rhs[i] = state.w[j] + dt * source;

        let a = (gp + y * lprime) / len;
        let (lo, di, up) = if a.abs() * dy <= 2.0 * diff * dy * dy {
            let c = a / (2.0 * dy);
            (-dt * (diff - c), 1.0 + 2.0 * dt * diff, -dt * (diff + c))
        } else if a > 0.0 {
            (-dt * diff, 1.0 + 2.0 * dt * diff + dt * a / dy, -dt * (diff + a / dy))
        } else {
            (-dt * (diff - a / dy), 1.0 + 2.0 * dt * diff - dt * a / dy, -dt * diff)
        };
        work.lower[i] = lo;
        work.diag[i] = di;
        work.upper[i] = up;
    }
    tridiag::solve_in_place(&work.lower, &work.diag, &work.upper, &mut work.rhs, &mut work.scratch);

    let sup_old = state.w.iter().copied().fold(0.0, f64::max);
    let sup_new = work.rhs.iter().copied().fold(0.0, f64::max);
    let bound = STABILITY_FACTOR * sup_old.max(sup_delayed);
    if !sup_new.is_finite() || work.rhs.iter().any(|v| !v.is_finite()) || sup_new > bound.max(f64::MIN_POSITIVE) {
        return Err(Error::StabilityFailure { t: state.t + dt, before: sup_old, after: sup_new });
    }

    // Recycle the oldest record's storage for the new one.
    let mut rec = state.history.pop_front().expect("history is never empty");
    for (dst, &src) in state.w[1..n].iter_mut().zip(work.rhs.iter()) {
        *dst = src.clamp(0.0, ustar);
    }
    state.w[0] = 0.0;
    state.w[n] = 0.0;
    state.g = g_new;
    state.h = h_new;
    state.gprime = gp;
    state.hprime = hp;
    state.steps += 1;
    state.ticks += state.dt_ticks;
    state.t = state.ticks as f64 * state.base_dt;

    rec.t = state.t;
    rec.g = g_new;
    rec.h = h_new;
    rec.w.clear();
    rec.w.extend_from_slice(&state.w);
    state.history.push_back(rec);

    let past = state.history.front().expect("history is never empty");
    let slack = 1e-12 * len;
    if past.g < state.g - slack || past.h > state.h + slack {
        return Err(Error::NestingViolation { t: state.t });
    }

    if numerics.adapt_dt {
        maybe_double_dt(state, spec, numerics);
    }
    Ok(())
}

fn maybe_double_dt(state: &mut SolverState, spec: &ProblemSpec, numerics: &NumericsConfig) {
    let new_dt = 2.0 * state.dt;
    let dx = state.length() / state.n_cells() as f64;
    if new_dt > 0.2 * dx * dx || new_dt > numerics.dt_max || new_dt * spec.reaction.lipschitz >= 0.5 {
        return;
    }
    if spec.tau > 0.0 && !state.tau_steps.is_multiple_of(2) {
        return;
    }
    if !state.ticks.is_multiple_of(2 * state.dt_ticks) {
        return;
    }
    if spec.tau > 0.0 {
        let kept: VecDeque<Record> = state
            .history
            .drain(..)
            .enumerate()
            .filter_map(|(i, r)| (i % 2 == 0).then_some(r))
            .collect();
        state.history = kept;
        state.tau_steps /= 2;
    }
    state.dt = new_dt;
    state.dt_ticks *= 2;
}

/// Returned by observers after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Watches a run; may end it early.
pub trait Observer {
    fn observe(&mut self, state: &SolverState, row: &TrajectoryRow) -> Control;
}

impl<F: FnMut(&SolverState, &TrajectoryRow) -> Control> Observer for F {
    fn observe(&mut self, state: &SolverState, row: &TrajectoryRow) -> Control {
        self(state, row)
    }
}

/// Steps until `numerics.t_end` or until an observer stops the run.
///
/// Rows are recorded every step. Snapshots are taken at `t = 0`, every
/// `snapshot_every` time units and at the end.
pub fn run(
    state: &mut SolverState,
    spec: &ProblemSpec,
    numerics: &NumericsConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    let first = state.row();
    traj.rows.push(first);
    traj.snapshots.push(state.snapshot());
    let mut next_snapshot = if numerics.snapshot_every > 0.0 {
        state.t + numerics.snapshot_every
    } else {
        f64::INFINITY
    };
    let mut stopped = observers.iter_mut().any(|o| o.observe(state, &first) == Control::Stop);
    while !stopped && state.t + 0.5 * state.dt < numerics.t_end {
        step(state, spec, numerics)?;
        let row = state.row();
        traj.rows.push(row);
        if state.t >= next_snapshot - 0.5 * state.dt {
            traj.snapshots.push(state.snapshot());
            while next_snapshot <= state.t + 0.5 * state.dt {
                next_snapshot += numerics.snapshot_every;
            }
        }
        for o in observers.iter_mut() {
            if o.observe(state, &row) == Control::Stop {
                stopped = true;
            }
        }
    }
    if traj.snapshots.last().is_none_or(|s| s.t < state.t) {
        traj.snapshots.push(state.snapshot());
    }
    Ok(traj)
}

/// Convenience: validate, initialise and run without observers.
pub fn simulate(spec: &ProblemSpec, history: &InitialHistory, numerics: &NumericsConfig) -> Result<Trajectory> {
    let mut state = init_state(spec, history, numerics)?;
    run(&mut state, spec, numerics, &mut [])
}
