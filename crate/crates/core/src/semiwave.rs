//! Semi-wave profiles and the spreading speed `c*`.
//!
//! The profile `q_c` solves
//!
//! ```text
//! q'' - c q' - d q + f(q(z - c tau)) = 0,   z > 0,     q = 0 for z <= 0,
//! ```
//!
//! and is computed on `[0, L]` with `q(L) = u*` by marching the parabolic
//! problem `v_t = v_zz - c v_z - d v + f(v(t, z - c tau))` from the
//! supersolution `v = u*`. Diffusion, advection and the `-d v` term are
//! implicit; the delayed reaction is explicit. Because `f` is nondecreasing
//! the update is monotone for every pseudo-time step, so iterates decrease
//! pointwise towards the maximal solution of the truncated problem.
//!
//! `c*` is the unique zero of `eta(c) = q_c'(0) - c / mu` on `(0, c0(tau))`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristic;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::tridiag::Factored;

/// Grid and stopping parameters for one relaxation solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiwaveNumerics {
    /// Truncation length `L`.
    pub length: f64,
    pub dz: f64,
    /// Sup-norm tolerance on the steady-state defect.
    pub relax_tol: f64,
    pub max_steps: usize,
    /// Pseudo-time step of the relaxation.
    pub pseudo_dt: f64,
    /// Re-solve on `[0, 2L]` and compare slopes.
    pub check_truncation: bool,
    /// Tolerance on `|eta(c*)|` for the speed bisection.
    pub eta_tol: f64,
}

impl SemiwaveNumerics {
    /// Defaults for a solve at speed `c`: `L = max(40, 20 c tau + 40 / sqrt(f'(0) - d))`,
    /// `dz = L / 2000`.
    pub fn for_speed(spec: &ProblemSpec, c: f64) -> Self {
        let growth = spec.reaction.linear_growth();
        let length = 40f64.max(20.0 * c * spec.tau + 40.0 / growth.sqrt());
        SemiwaveNumerics {
            length,
            dz: length / 2000.0,
            relax_tol: 1e-9,
            max_steps: 200_000,
            pseudo_dt: 2.0,
            check_truncation: false,
            eta_tol: 1e-6,
        }
    }
}

/// Discrete semi-wave on `z_i = i dz`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiWaveProfile {
    pub c: f64,
    pub tau: f64,
    pub length: f64,
    pub dz: f64,
    pub ustar: f64,
    pub q: Vec<f64>,
    /// Second-order one-sided slope at `0+`.
    pub qprime0: f64,
    /// Sup-norm steady-state defect at exit.
    pub residual: f64,
    pub steps: usize,
    /// Largest pointwise increase between monotonicity checkpoints (every
    /// 100 pseudo-time steps); zero up to rounding for a cold start.
    pub max_increase: f64,
}

impl SemiWaveProfile {
    /// `q(z)` with `q = 0` for `z <= 0` and `q = u*` beyond `L`.
    pub fn value_at(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= self.length {
            return self.ustar;
        }
        let s = z / self.dz;
        let n = self.q.len() - 1;
        let i = (s.floor() as usize).min(n - 1);
        let frac = s - i as f64;
        self.q[i] * (1.0 - frac) + self.q[i + 1] * frac
    }

    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz
    }

    /// `z,q` for every grid node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["z", "q"])?;
        for (i, q) in self.q.iter().enumerate() {
            wtr.write_record([self.z(i).to_string(), q.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Relaxation engine for a fixed `(c, grid)`.
struct Relaxation<'a> {
    spec: &'a ProblemSpec,
    c: f64,
    n: usize,
    dz: f64,
    factors: Factored,
    upper_coef: f64,
    inv_pdt: f64,
    shift: f64,
}

impl<'a> Relaxation<'a> {
    fn new(spec: &'a ProblemSpec, c: f64, length: f64, dz: f64, pseudo_dt: f64) -> Result<Self> {
        let n = (length / dz).round() as usize;
        let dz = length / n as f64;
        if c * dz > 2.0 {
            return Err(Error::InvalidParameter(format!(
                "cell Peclet number c dz / 2 = {} exceeds 1; refine dz",
                0.5 * c * dz
            )));
        }
        let d = spec.reaction.d;
        let inv_pdt = 1.0 / pseudo_dt;
        let diff = 1.0 / (dz * dz);
        let adv = c / (2.0 * dz);
        let m = n - 1;
        let lower = vec![-(diff + adv); m];
        let upper = vec![-(diff - adv); m];
        let diag = vec![inv_pdt + 2.0 * diff + d; m];
        Ok(Relaxation {
            spec,
            c,
            n,
            dz,
            factors: Factored::new(&lower, &diag, &upper),
            upper_coef: diff - adv,
            inv_pdt,
            shift: c * spec.tau / dz,
        })
    }

    /// `v(z_i - c tau)` with zero extension and linear interpolation.
    #[inline]
    fn delayed(&self, v: &[f64], i: usize) -> f64 {
        let s = i as f64 - self.shift;
        if s <= 0.0 {
            return 0.0;
        }
        let k = s.floor() as usize;
        let frac = s - k as f64;
        if frac == 0.0 {
            v[k]
        } else {
            v[k] * (1.0 - frac) + v[k + 1] * frac
        }
    }

    fn defect(&self, v: &[f64]) -> f64 {
        let r = &self.spec.reaction;
        let diff = 1.0 / (self.dz * self.dz);
        let adv = self.c / (2.0 * self.dz);
        (1..self.n)
            .map(|i| {
                let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * diff;
                let grad = (v[i + 1] - v[i - 1]) * adv;
                (lap - grad - r.d * v[i] + r.eval(self.delayed(v, i))).abs()
            })
            .fold(0.0, f64::max)
    }

    fn run(&self, init: Vec<f64>, tol: f64, max_steps: usize) -> Result<SemiWaveProfile> {
        let ustar = self.spec.ustar();
        let r = &self.spec.reaction;
        let mut v = init;
        debug_assert_eq!(v.len(), self.n + 1);
        v[0] = 0.0;
        v[self.n] = ustar;
        let mut rhs = vec![0.0; self.n - 1];
        let mut checkpoint = v.clone();
        let mut max_increase = 0.0_f64;
        let mut defect = self.defect(&v);
        let mut steps = 0;
        while defect >= tol {
            if steps >= max_steps {
                return Err(Error::NotConverged { steps, defect });
            }
            for i in 1..self.n {
                rhs[i - 1] = v[i] * self.inv_pdt + r.eval(self.delayed(&v, i));
            }
            rhs[self.n - 2] += self.upper_coef * ustar;
            self.factors.solve(&mut rhs);
            v[1..self.n].copy_from_slice(&rhs);
            steps += 1;
            if steps % 100 == 0 {
                for (new, old) in v.iter().zip(checkpoint.iter_mut()) {
                    max_increase = max_increase.max(new - *old);
                    *old = *new;
                }
            }
            if steps % 10 == 0 {
                defect = self.defect(&v);
            }
        }
        let qprime0 = (4.0 * v[1] - v[2] - 3.0 * v[0]) / (2.0 * self.dz);
        Ok(SemiWaveProfile {
            c: self.c,
            tau: self.spec.tau,
            length: self.n as f64 * self.dz,
            dz: self.dz,
            ustar,
            q: v,
            qprime0,
            residual: defect,
            steps,
            max_increase,
        })
    }
}

fn check_grid(spec: &ProblemSpec, c: f64, num: &SemiwaveNumerics) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("speed must be >= 0, got {c}")));
    }
    let min_len = 10.0 * (c * spec.tau).max(1.0);
    if num.length < min_len {
        return Err(Error::InvalidParameter(format!(
            "truncation length {} below 10 max(1, c tau) = {min_len}",
            num.length
        )));
    }
    if !(num.dz > 0.0 && num.dz <= num.length / 200.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "dz = {} must be in (0, L/200]",
            num.dz
        )));
    }
    if !(num.pseudo_dt > 0.0 && num.relax_tol > 0.0) {
        return Err(Error::InvalidParameter(
            "pseudo_dt and relax_tol must be positive".into(),
        ));
    }
    Ok(())
}

fn solve_from(
    spec: &ProblemSpec,
    c: f64,
    num: &SemiwaveNumerics,
    init: Option<&SemiWaveProfile>,
    tol: f64,
) -> Result<SemiWaveProfile> {
    let relax = Relaxation::new(spec, c, num.length, num.dz, num.pseudo_dt)?;
    let start = match init {
        Some(p) if p.q.len() == relax.n + 1 => p.q.clone(),
        _ => vec![spec.ustar(); relax.n + 1],
    };
    relax.run(start, tol, num.max_steps)
}

/// Solves the truncated semi-wave problem at speed `c` from the supersolution `u*`.
pub fn solve_profile(spec: &ProblemSpec, c: f64, num: &SemiwaveNumerics) -> Result<SemiWaveProfile> {
    check_grid(spec, c, num)?;
    if !num.check_truncation {
        return solve_from(spec, c, num, None, num.relax_tol);
    }
    // tighter inner solves so the comparison below measures truncation only
    let tol = num.relax_tol * 1e-2;
    let profile = solve_from(spec, c, num, None, tol)?;
    let doubled = SemiwaveNumerics {
        length: 2.0 * profile.length,
        ..*num
    };
    // the L-solution extended by u* is a supersolution on [0, 2L]
    let mut extended = profile.q.clone();
    extended.resize(2 * (profile.q.len() - 1) + 1, spec.ustar());
    let seed = SemiWaveProfile { q: extended, ..profile.clone() };
    let relax = Relaxation::new(spec, c, doubled.length, profile.dz, num.pseudo_dt)?;
    let wide = relax.run(seed.q, tol, num.max_steps)?;
    let change = (wide.qprime0 - profile.qprime0).abs();
    if change > 10.0 * num.relax_tol {
        return Err(Error::TruncationSuspect {
            length: profile.length,
            change,
        });
    }
    Ok(profile)
}

/// `eta(c) = q_c'(0) - c / mu`.
pub fn eta(spec: &ProblemSpec, c: f64, num: &SemiwaveNumerics) -> Result<f64> {
    Ok(solve_profile(spec, c, num)?.qprime0 - c / spec.mu)
}

/// Spreading speed and the semi-wave selected by the Stefan slope condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedResult {
    pub mu: f64,
    pub tau: f64,
    pub cstar: f64,
    pub c0: f64,
    pub profile: SemiWaveProfile,
    /// `|q'(0) - c*/mu|` at the returned speed.
    pub eta_residual: f64,
}

/// Numerics shared by every solve of one `c*` bisection: the grid is sized
/// for the largest speed in the bracket so warm starts line up.
pub fn speed_numerics(spec: &ProblemSpec) -> Result<SemiwaveNumerics> {
    let r = &spec.reaction;
    let c0 = characteristic::c0(spec.tau, r.fprime0, r.d)?;
    Ok(SemiwaveNumerics::for_speed(spec, c0))
}

/// Bisection for the zero of `eta` on `[0, c0 (1 - 1e-6)]` using only its sign.
/// Each trial solve is warm-started from the profile at the current lower
/// end of the bracket, which is a supersolution for every larger speed.
pub fn cstar(spec: &ProblemSpec, num: Option<&SemiwaveNumerics>) -> Result<SpeedResult> {
    let r = &spec.reaction;
    let c0 = characteristic::c0(spec.tau, r.fprime0, r.d)?;
    let num = match num {
        Some(n) => *n,
        None => SemiwaveNumerics::for_speed(spec, c0),
    };
    let hi_c = c0 * (1.0 - 1e-6);
    check_grid(spec, hi_c, &num)?;
    let eta_of = |p: &SemiWaveProfile| p.qprime0 - p.c / spec.mu;

    let mut lo_profile = solve_from(spec, 0.0, &num, None, num.relax_tol)?;
    let mut lo = 0.0;
    let eta_lo = eta_of(&lo_profile);
    let hi_profile = solve_from(spec, hi_c, &num, Some(&lo_profile), num.relax_tol)?;
    let mut hi = hi_c;
    let eta_hi = eta_of(&hi_profile);
    if !(eta_lo > 0.0 && eta_hi < 0.0) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            eta_lo,
            eta_hi,
        });
    }

    let width_tol = 1e-6 * c0;
    let mut best: Option<SemiWaveProfile> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let profile = solve_from(spec, mid, &num, Some(&lo_profile), num.relax_tol)?;
        let e = eta_of(&profile);
        let done = hi - lo < width_tol && e.abs() < num.eta_tol;
        if e > 0.0 {
            lo = mid;
            lo_profile = profile.clone();
        } else {
            hi = mid;
        }
        best = Some(profile);
        if done || hi - lo < 1e-15 * c0 {
            break;
        }
    }
    let profile = best.expect("bisection runs at least once");
    let cstar = profile.c;
    let eta_residual = eta_of(&profile).abs();
    if !(cstar > 0.0 && cstar < c0) || eta_residual >= num.eta_tol {
        return Err(Error::ConvergenceFailure(format!(
            "c* bisection ended at c = {cstar} with |eta| = {eta_residual:e}"
        )));
    }
    Ok(SpeedResult {
        mu: spec.mu,
        tau: spec.tau,
        cstar,
        c0,
        profile,
        eta_residual,
    })
}

/// Parameter swept by [`speed_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedAxis {
    Tau,
    Mu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPoint {
    pub value: f64,
    pub result: std::result::Result<SpeedResult, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedCurve {
    pub axis: SpeedAxis,
    pub points: Vec<SpeedPoint>,
    /// Whether successful points are strictly ordered in the direction the
    /// theory predicts (increasing in mu, decreasing in tau). `None` when
    /// fewer than two points succeeded.
    pub monotone: Option<bool>,
}

/// `c*` for each value along `axis`; per-point failures are recorded.
/// Points run on the current rayon pool and come back in input order.
pub fn speed_curve(template: &ProblemSpec, axis: SpeedAxis, values: &[f64]) -> Result<SpeedCurve> {
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sweep values must be sorted ascending".into()));
    }
    let points: Vec<SpeedPoint> = values
        .par_iter()
        .map(|&value| {
            let result = match axis {
                SpeedAxis::Tau => template.with_tau(value),
                SpeedAxis::Mu => template.with_mu(value),
            }
            .and_then(|spec| cstar(&spec, None));
            SpeedPoint { value, result }
        })
        .collect();
    let speeds: Vec<f64> = points
        .iter()
        .filter_map(|p| p.result.as_ref().ok().map(|r| r.cstar))
        .collect();
    let monotone = (speeds.len() >= 2).then(|| {
        speeds.windows(2).all(|w| match axis {
            SpeedAxis::Mu => w[1] > w[0],
            SpeedAxis::Tau => w[1] < w[0],
        })
    });
    Ok(SpeedCurve {
        axis,
        points,
        monotone,
    })
}

impl SpeedCurve {
    /// `axis_value,c0,cstar,qprime0,eta_residual`; failed points keep `c0`
    /// when it is computable and write `NaN` elsewhere.
    pub fn write_csv(&self, template: &ProblemSpec, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["axis_value", "c0", "cstar", "qprime0", "eta_residual"])?;
        for p in &self.points {
            let row = match &p.result {
                Ok(r) => [p.value, r.c0, r.cstar, r.profile.qprime0, r.eta_residual],
                Err(_) => {
                    let r = &template.reaction;
                    let tau = match self.axis {
                        SpeedAxis::Tau => p.value,
                        SpeedAxis::Mu => template.tau,
                    };
                    let c0 = characteristic::c0(tau, r.fprime0, r.d).unwrap_or(f64::NAN);
                    [p.value, c0, f64::NAN, f64::NAN, f64::NAN]
                }
            };
            wtr.write_record(row.map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}
