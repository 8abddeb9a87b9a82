//! Reaction terms, problem parameters and initial histories.
//!
//! A [`ReactionFamily`] is only constructed after hypothesis (H) has been
//! checked numerically on a dense sample of `[0, u*]`:
//!
//! * `f(0) = 0` and `f'(0) > d`,
//! * `f(s) = d s` has exactly one positive root `u*`,
//! * `f` is nondecreasing on `[0, u*]`,
//! * `f(s)/s` is nonincreasing on `(0, u*]`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of sample points used for the (H) checks.
pub const DEFAULT_HYPOTHESIS_SAMPLES: usize = 1000;

const BOUNDARY_ZERO_TOL: f64 = 1e-10;

/// Birth functions available to the stage-structured family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BirthFunction {
    /// `b(s) = p s / (1 + q s)`
    BevertonHolt { p: f64, q: f64 },
    /// `b(s) = (p / q) (1 - exp(-q s))`
    Saturating { p: f64, q: f64 },
}

impl BirthFunction {
    fn value(&self, s: f64) -> f64 {
        match *self {
            BirthFunction::BevertonHolt { p, q } => p * s / (1.0 + q * s),
            BirthFunction::Saturating { p, q } => -p * (-q * s).exp_m1() / q,
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        match *self {
            BirthFunction::BevertonHolt { p, q } => p / ((1.0 + q * s) * (1.0 + q * s)),
            BirthFunction::Saturating { p, q } => p * (-q * s).exp(),
        }
    }

    fn check_params(&self) -> Result<()> {
        let (p, q) = match *self {
            BirthFunction::BevertonHolt { p, q } | BirthFunction::Saturating { p, q } => (p, q),
        };
        if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "birth function needs p > 0 and q > 0, got p = {p}, q = {q}"
            )));
        }
        Ok(())
    }
}

/// The shipped reaction families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyId {
    /// `f(s) = p s / (1 + q s)`
    BevertonHolt { p: f64, q: f64 },
    /// `f(s) = (d + r) s - r s^2`, so that `f(s) - d s = r s (1 - s)`.
    LogisticDeath { r: f64 },
    /// `f(s) = exp(-d_i tau) b(s)`: births surviving a juvenile stage of length
    /// `tau` with juvenile death rate `d_i`.
    StageStructured {
        birth: BirthFunction,
        d_i: f64,
        tau: f64,
    },
}

/// A reaction term `f` together with the death rate `d` it was validated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReactionFamily {
    pub family: FamilyId,
    pub d: f64,
    /// Unique positive root of `f(s) = d s`.
    pub ustar: f64,
    /// `f'(0)`
    pub fprime0: f64,
    /// `max f'` over the sampled `[0, u*]`.
    pub lipschitz: f64,
}

impl ReactionFamily {
    /// Raw `f(s)`, no clamping.
    pub fn f(&self, s: f64) -> f64 {
        raw_f(&self.family, self.d, s)
    }

    pub fn fprime(&self, s: f64) -> f64 {
        raw_fprime(&self.family, self.d, s)
    }

    /// `f(max(s, 0))`.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.f(s.max(0.0))
    }

    /// `f'(0) - d`, strictly positive for a valid family.
    pub fn linear_growth(&self) -> f64 {
        self.fprime0 - self.d
    }

    /// Critical habitat length `pi / sqrt(f'(0) - d)`.
    pub fn critical_length(&self) -> f64 {
        PI / self.linear_growth().sqrt()
    }

    /// `\int_0^{u*} (f(s) - d s) ds` by composite Simpson on 2000 panels.
    pub fn potential(&self) -> f64 {
        let n = 2000;
        let h = self.ustar / n as f64;
        let g = |s: f64| self.f(s) - self.d * s;
        let mut acc = g(0.0) + g(self.ustar);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }
}

fn raw_f(family: &FamilyId, d: f64, s: f64) -> f64 {
    match *family {
        FamilyId::BevertonHolt { p, q } => p * s / (1.0 + q * s),
        FamilyId::LogisticDeath { r } => (d + r) * s - r * s * s,
        FamilyId::StageStructured { birth, d_i, tau } => (-d_i * tau).exp() * birth.value(s),
    }
}

fn raw_fprime(family: &FamilyId, d: f64, s: f64) -> f64 {
    match *family {
        FamilyId::BevertonHolt { p, q } => p / ((1.0 + q * s) * (1.0 + q * s)),
        FamilyId::LogisticDeath { r } => d + r - 2.0 * r * s,
        FamilyId::StageStructured { birth, d_i, tau } => {
            (-d_i * tau).exp() * birth.derivative(s)
        }
    }
}

fn closed_form_ustar(family: &FamilyId, d: f64) -> Option<f64> {
    match *family {
        FamilyId::BevertonHolt { p, q } => Some((p / d - 1.0) / q),
        FamilyId::LogisticDeath { .. } => Some(1.0),
        FamilyId::StageStructured {
            birth: BirthFunction::BevertonHolt { p, q },
            d_i,
            tau,
        } => Some(((-d_i * tau).exp() * p / d - 1.0) / q),
        FamilyId::StageStructured { .. } => None,
    }
}

fn check_family_params(family: &FamilyId, d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("death rate must be > 0, got {d}")));
    }
    match *family {
        FamilyId::BevertonHolt { p, q } => {
            if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "beverton_holt needs p > 0 and q > 0, got p = {p}, q = {q}"
                )));
            }
        }
        FamilyId::LogisticDeath { r } => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "logistic_death needs r > 0, got {r}"
                )));
            }
        }
        FamilyId::StageStructured { birth, d_i, tau } => {
            birth.check_params()?;
            if !(d_i >= 0.0 && d_i.is_finite() && tau >= 0.0 && tau.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "stage_structured needs d_i >= 0 and tau >= 0, got d_i = {d_i}, tau = {tau}"
                )));
            }
        }
    }
    Ok(())
}

/// Builds a reaction family and verifies (H) on [`DEFAULT_HYPOTHESIS_SAMPLES`] points.
pub fn make_reaction(family: FamilyId, d: f64) -> Result<ReactionFamily> {
    make_reaction_with(family, d, DEFAULT_HYPOTHESIS_SAMPLES)
}

/// Same as [`make_reaction`] with an explicit sample count for the (H) checks.
pub fn make_reaction_with(family: FamilyId, d: f64, samples: usize) -> Result<ReactionFamily> {
    check_family_params(&family, d)?;
    let samples = samples.max(100);
    let f = |s: f64| raw_f(&family, d, s);
    let fp = |s: f64| raw_fprime(&family, d, s);

    if f(0.0).abs() > 1e-14 {
        return Err(Error::HypothesisViolation(format!("f(0) = {} != 0", f(0.0))));
    }
    let fprime0 = fp(0.0);
    if fprime0 - d <= 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "f'(0) - d = {} is not positive",
            fprime0 - d
        )));
    }

    let ustar = positive_equilibrium(&f, d, samples)?;
    if let Some(exact) = closed_form_ustar(&family, d) {
        if (exact - ustar).abs() > 1e-9 * exact.max(1.0) {
            return Err(Error::HypothesisViolation(format!(
                "numerical equilibrium {ustar} disagrees with closed form {exact}"
            )));
        }
    }
    let ustar = closed_form_ustar(&family, d).unwrap_or(ustar);

    let mut lipschitz = 0.0_f64;
    let mut prev_f = 0.0_f64;
    let mut prev_ratio = fprime0;
    for k in 0..samples {
        let s = ustar * k as f64 / (samples - 1) as f64;
        let slope = fp(s);
        lipschitz = lipschitz.max(slope.abs());
        if slope < -1e-12 {
            return Err(Error::HypothesisViolation(format!(
                "f is decreasing at s = {s} (f' = {slope})"
            )));
        }
        let value = f(s);
        if value < prev_f - 1e-14 * prev_f.abs().max(1.0) {
            return Err(Error::HypothesisViolation(format!(
                "f is decreasing between samples near s = {s}"
            )));
        }
        prev_f = value;
        if k > 0 {
            let ratio = value / s;
            if ratio > prev_ratio + 1e-12 * prev_ratio.abs().max(1.0) {
                return Err(Error::HypothesisViolation(format!(
                    "f(s)/s increases near s = {s}"
                )));
            }
            prev_ratio = ratio;
        }
    }

    Ok(ReactionFamily {
        family,
        d,
        ustar,
        fprime0,
        lipschitz,
    })
}

/// Locates the unique positive root of `f(s) - d s` by a sign scan on a
/// log-spaced grid followed by bisection.
fn positive_equilibrium(f: &impl Fn(f64) -> f64, d: f64, samples: usize) -> Result<f64> {
    let (lo_exp, hi_exp) = (-9.0_f64, 9.0_f64);
    let g = |s: f64| f(s) - d * s;
    let mut bracket = None;
    let mut changes = 0;
    let mut prev_s = 10f64.powf(lo_exp);
    let mut prev = g(prev_s);
    if prev <= 0.0 {
        return Err(Error::HypothesisViolation(
            "f(s) - d s is not positive near 0".into(),
        ));
    }
    for k in 1..samples {
        let s = 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (samples - 1) as f64);
        let v = g(s);
        if (v > 0.0) != (prev > 0.0) {
            changes += 1;
            if bracket.is_none() {
                bracket = Some((prev_s, s));
            }
        }
        prev_s = s;
        prev = v;
    }
    let (mut lo, mut hi) = match (changes, bracket) {
        (1, Some(b)) => b,
        (0, _) => {
            return Err(Error::HypothesisViolation(
                "f(s) = d s has no positive root".into(),
            ))
        }
        _ => {
            return Err(Error::HypothesisViolation(format!(
                "f(s) = d s has {changes} sign changes, positive root is not unique"
            )))
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluates `f(max(s, 0))`.
pub fn eval_f(reaction: &ReactionFamily, s: f64) -> f64 {
    reaction.eval(s)
}

/// Physical parameters of the free-boundary problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub reaction: ReactionFamily,
    pub tau: f64,
    pub mu: f64,
}

impl ProblemSpec {
    pub fn new(reaction: ReactionFamily, tau: f64, mu: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
        }
        Ok(ProblemSpec { reaction, tau, mu })
    }

    pub fn ustar(&self) -> f64 {
        self.reaction.ustar
    }

    /// Copy with a different delay.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        ProblemSpec::new(self.reaction, tau, self.mu)
    }

    /// Copy with a different Stefan coefficient.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        ProblemSpec::new(self.reaction, self.tau, mu)
    }
}

/// Unvalidated history data `(phi(theta, .), g(theta), h(theta))`.
///
/// `phi[k]` holds samples on a uniform grid spanning `[g_hist[k], h_hist[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawHistory {
    pub thetas: Vec<f64>,
    pub g_hist: Vec<f64>,
    pub h_hist: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
}

impl RawHistory {
    /// History on the fixed domain `[g0, h0]` sampled from `profile(theta, x)`.
    /// Endpoint values are set to exactly zero.
    pub fn constant_domain(
        tau: f64,
        g0: f64,
        h0: f64,
        n_thetas: usize,
        n_points: usize,
        profile: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let n_thetas = if tau > 0.0 { n_thetas.max(2) } else { 1 };
        let n_points = n_points.max(3);
        let thetas: Vec<f64> = (0..n_thetas)
            .map(|k| {
                if k + 1 == n_thetas {
                    0.0
                } else {
                    -tau + tau * k as f64 / (n_thetas - 1) as f64
                }
            })
            .collect();
        let phi = thetas
            .iter()
            .map(|&theta| sample_profile(g0, h0, n_points, |x| profile(theta, x)))
            .collect();
        RawHistory {
            g_hist: vec![g0; thetas.len()],
            h_hist: vec![h0; thetas.len()],
            thetas,
            phi,
        }
    }

    /// `amplitude * cos(pi (x - m) / (h0 - g0))`, constant in theta.
    pub fn cosine(tau: f64, g0: f64, h0: f64, amplitude: f64, n_thetas: usize, n_points: usize) -> Self {
        let mid = 0.5 * (g0 + h0);
        let len = h0 - g0;
        RawHistory::constant_domain(tau, g0, h0, n_thetas, n_points, |_, x| {
            amplitude * (PI * (x - mid) / len).cos()
        })
    }

    /// Reads a history from a domain CSV (`theta,g,h`) and a sample CSV
    /// (`theta,x,phi`). Samples for each theta must form a uniform grid that
    /// spans that theta's domain.
    pub fn from_csv(domain_path: &Path, samples_path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct DomainRow {
            theta: f64,
            g: f64,
            h: f64,
        }
        #[derive(Deserialize)]
        struct SampleRow {
            theta: f64,
            x: f64,
            phi: f64,
        }
        let mut domains: Vec<DomainRow> = csv::Reader::from_path(domain_path)?
            .deserialize()
            .collect::<std::result::Result<_, _>>()?;
        domains.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        let samples: Vec<SampleRow> = csv::Reader::from_path(samples_path)?
            .deserialize()
            .collect::<std::result::Result<_, _>>()?;

        let mut raw = RawHistory {
            thetas: Vec::with_capacity(domains.len()),
            g_hist: Vec::with_capacity(domains.len()),
            h_hist: Vec::with_capacity(domains.len()),
            phi: Vec::with_capacity(domains.len()),
        };
        for dom in &domains {
            let mut pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| (s.theta - dom.theta).abs() <= 1e-12 * dom.theta.abs().max(1.0))
                .map(|s| (s.x, s.phi))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.len() < 2 {
                return Err(Error::Config(format!(
                    "history samples for theta = {} have fewer than two points",
                    dom.theta
                )));
            }
            let n = pts.len() - 1;
            let span = dom.h - dom.g;
            let tol = 1e-8 * span.abs().max(1.0);
            for (j, &(x, _)) in pts.iter().enumerate() {
                let expected = dom.g + span * j as f64 / n as f64;
                if (x - expected).abs() > tol {
                    return Err(Error::Config(format!(
                        "history samples for theta = {} are not a uniform grid on [{}, {}]",
                        dom.theta, dom.g, dom.h
                    )));
                }
            }
            raw.thetas.push(dom.theta);
            raw.g_hist.push(dom.g);
            raw.h_hist.push(dom.h);
            raw.phi.push(pts.into_iter().map(|(_, v)| v).collect());
        }
        Ok(raw)
    }
}

fn sample_profile(g: f64, h: f64, n_points: usize, profile: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = n_points - 1;
    (0..=n)
        .map(|j| {
            if j == 0 || j == n {
                0.0
            } else {
                profile(g + (h - g) * j as f64 / n as f64)
            }
        })
        .collect()
}

/// A history that satisfies the range bounds and the compatible condition.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHistory {
    thetas: Vec<f64>,
    g_hist: Vec<f64>,
    h_hist: Vec<f64>,
    phi: Vec<Vec<f64>>,
}

impl InitialHistory {
    /// The zero solution on a fixed habitat. It lies outside the admissible
    /// class (which needs `phi > 0` inside) but is a valid trivial datum.
    pub fn trivial(tau: f64, g0: f64, h0: f64) -> Self {
        let thetas = if tau > 0.0 { vec![-tau, 0.0] } else { vec![0.0] };
        let n = thetas.len();
        InitialHistory {
            thetas,
            g_hist: vec![g0; n],
            h_hist: vec![h0; n],
            phi: vec![vec![0.0; 3]; n],
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn g_hist(&self) -> &[f64] {
        &self.g_hist
    }

    pub fn h_hist(&self) -> &[f64] {
        &self.h_hist
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Initial habitat `[g(0), h(0)]`.
    pub fn initial_domain(&self) -> (f64, f64) {
        let last = self.thetas.len() - 1;
        (self.g_hist[last], self.h_hist[last])
    }

    /// Value of sample `k` at physical position `x`, zero outside its habitat.
    pub fn sample_value(&self, k: usize, x: f64) -> f64 {
        let (g, h) = (self.g_hist[k], self.h_hist[k]);
        if x <= g || x >= h {
            return 0.0;
        }
        let vals = &self.phi[k];
        let n = vals.len() - 1;
        let s = (x - g) / (h - g) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let frac = s - i as f64;
        vals[i] * (1.0 - frac) + vals[i + 1] * frac
    }

    /// Linear interpolation in theta of `(g, h)` and of `phi` at physical `x`.
    pub fn at(&self, theta: f64) -> HistoryFrame<'_> {
        let n = self.thetas.len();
        if n == 1 || theta >= self.thetas[n - 1] {
            return HistoryFrame { history: self, lo: n - 1, hi: n - 1, weight: 0.0 };
        }
        if theta <= self.thetas[0] {
            return HistoryFrame { history: self, lo: 0, hi: 0, weight: 0.0 };
        }
        let hi = self.thetas.partition_point(|&t| t <= theta).min(n - 1);
        let lo = hi - 1;
        let weight = (theta - self.thetas[lo]) / (self.thetas[hi] - self.thetas[lo]);
        HistoryFrame { history: self, lo, hi, weight }
    }
}

/// A history evaluated at one intermediate theta.
pub struct HistoryFrame<'a> {
    history: &'a InitialHistory,
    lo: usize,
    hi: usize,
    weight: f64,
}

impl HistoryFrame<'_> {
    pub fn domain(&self) -> (f64, f64) {
        let h = self.history;
        let w = self.weight;
        (
            h.g_hist[self.lo] * (1.0 - w) + h.g_hist[self.hi] * w,
            h.h_hist[self.lo] * (1.0 - w) + h.h_hist[self.hi] * w,
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        let h = self.history;
        let w = self.weight;
        if w == 0.0 {
            return h.sample_value(self.lo, x);
        }
        h.sample_value(self.lo, x) * (1.0 - w) + h.sample_value(self.hi, x) * w
    }
}

/// Checks a raw history against the problem: theta grid covers `[-tau, 0]`,
/// `g < h`, the compatible condition, and `0 < phi <= u*` inside with zero
/// boundary values.
pub fn validate_history(spec: &ProblemSpec, raw: RawHistory) -> Result<InitialHistory> {
    let n = raw.thetas.len();
    if n == 0 {
        return Err(Error::InvalidParameter("history is empty".into()));
    }
    if raw.g_hist.len() != n || raw.h_hist.len() != n || raw.phi.len() != n {
        return Err(Error::InvalidParameter(
            "history arrays have mismatched lengths".into(),
        ));
    }
    let tol = 1e-12 * spec.tau.max(1.0);
    if raw.thetas[n - 1].abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "last history time must be 0, got {}",
            raw.thetas[n - 1]
        )));
    }
    if (raw.thetas[0] + spec.tau).abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "first history time must be -tau = {}, got {}",
            -spec.tau, raw.thetas[0]
        )));
    }
    if raw.thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "history times must be strictly increasing".into(),
        ));
    }

    let (g0, h0) = (raw.g_hist[n - 1], raw.h_hist[n - 1]);
    let ustar = spec.ustar();
    for k in 0..n {
        let (theta, g, h) = (raw.thetas[k], raw.g_hist[k], raw.h_hist[k]);
        if !(g < h) {
            return Err(Error::InvalidParameter(format!(
                "empty habitat at theta = {theta}: g = {g}, h = {h}"
            )));
        }
        let slack = 1e-12 * (h0 - g0);
        if g < g0 - slack || h > h0 + slack {
            return Err(Error::CompatibleConditionViolation { theta, g, h, g0, h0 });
        }
        let vals = &raw.phi[k];
        if vals.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "history at theta = {theta} needs at least 3 samples"
            )));
        }
        let last = vals.len() - 1;
        for (j, &v) in vals.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::RangeViolation(format!(
                    "non-finite phi at theta = {theta}"
                )));
            }
            if j == 0 || j == last {
                if v.abs() > BOUNDARY_ZERO_TOL * ustar.max(1.0) {
                    return Err(Error::RangeViolation(format!(
                        "phi = {v} at the boundary of the habitat at theta = {theta}"
                    )));
                }
            } else if !(v > 0.0 && v <= ustar * (1.0 + 1e-12)) {
                return Err(Error::RangeViolation(format!(
                    "phi = {v} outside (0, u* = {ustar}] at theta = {theta}"
                )));
            }
        }
    }

    let mut phi = raw.phi;
    for vals in phi.iter_mut() {
        let last = vals.len() - 1;
        vals[0] = 0.0;
        vals[last] = 0.0;
    }
    Ok(InitialHistory {
        thetas: raw.thetas,
        g_hist: raw.g_hist,
        h_hist: raw.h_hist,
        phi,
    })
}
