//! The transcendental characteristic function
//!
//! ```text
//! Delta_c(lambda, tau) = lambda^2 - c lambda - d + f'(0) exp(-lambda c tau)
//! ```
//!
//! its linear speed bound `c0(tau)` (the smallest `c` at which a positive
//! real root exists), and the complex root in the strip
//! `Omega = { Re > 0, 0 < Im < pi / (c tau) }` that exists for `c < c0(tau)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default bracket width for `c0` and residual for roots.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_BISECTION: usize = 400;
const MAX_NEWTON: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicQuery {
    pub c: f64,
    pub tau: f64,
    pub fprime0: f64,
    pub d: f64,
}

impl CharacteristicQuery {
    pub fn new(c: f64, tau: f64, fprime0: f64, d: f64) -> Result<Self> {
        check_linear(tau, fprime0, d)?;
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("wave speed must be >= 0, got {c}")));
        }
        Ok(CharacteristicQuery { c, tau, fprime0, d })
    }

    fn ct(&self) -> f64 {
        self.c * self.tau
    }

    /// `Delta_c` on the real axis.
    pub fn real(&self, lambda: f64) -> f64 {
        lambda * lambda - self.c * lambda - self.d + self.fprime0 * (-lambda * self.ct()).exp()
    }

    /// `d Delta_c / d lambda` on the real axis; strictly increasing in `lambda`.
    pub fn real_slope(&self, lambda: f64) -> f64 {
        let ct = self.ct();
        2.0 * lambda - self.c - self.fprime0 * ct * (-lambda * ct).exp()
    }

    /// Minimiser of the strictly convex map `lambda -> Delta_c(lambda)` on
    /// `lambda >= 0`, and the minimum value.
    pub fn convex_minimum(&self) -> (f64, f64) {
        if self.c == 0.0 {
            return (0.0, self.real(0.0));
        }
        // slope(c/2) <= 0 <= slope(c/2 + f'(0) c tau / 2)
        let mut lo = 0.5 * self.c;
        let mut hi = 0.5 * self.c + 0.5 * self.fprime0 * self.ct();
        if self.real_slope(lo) >= 0.0 {
            return (lo, self.real(lo));
        }
        for _ in 0..MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.real_slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        (lambda, self.real(lambda))
    }
}

fn check_linear(tau: f64, fprime0: f64, d: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    if !(fprime0 > d && d.is_finite() && fprime0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need f'(0) > d, got f'(0) = {fprime0}, d = {d}"
        )));
    }
    Ok(())
}

/// Exact evaluation of `Delta_c(lambda, tau)` at complex `lambda`.
pub fn delta(query: &CharacteristicQuery, lambda: Complex64) -> Complex64 {
    lambda * lambda - query.c * lambda - query.d + query.fprime0 * (-lambda * query.ct()).exp()
}

/// Linear speed bound `c0(tau)` with the default bracket width.
pub fn c0(tau: f64, fprime0: f64, d: f64) -> Result<f64> {
    c0_with_tol(tau, fprime0, d, DEFAULT_TOL)
}

/// Bisection on `c` over `[0, 2 sqrt(f'(0) - d)]`; the sign of
/// `min_lambda Delta_c` decides each half.
pub fn c0_with_tol(tau: f64, fprime0: f64, d: f64, tol: f64) -> Result<f64> {
    check_linear(tau, fprime0, d)?;
    let mut lo = 0.0;
    let mut hi = 2.0 * (fprime0 - d).sqrt();
    let min_at = |c: f64| CharacteristicQuery { c, tau, fprime0, d }.convex_minimum().1;
    // at tau = 0 the upper end is the exact double-root speed
    if min_at(hi) > 1e-12 * fprime0 {
        return Err(Error::ConvergenceFailure(format!(
            "no positive real root at c = {hi}; bracket for c0 not found"
        )));
    }
    for _ in 0..MAX_BISECTION {
        if hi - lo <= tol {
            return Ok(hi);
        }
        let mid = 0.5 * (lo + hi);
        if min_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "c0 bracket [{lo}, {hi}] did not shrink below {tol}"
    )))
}

/// Residuals `(Delta, d Delta / d lambda)` of the tangency system at `(c, lambda_min)`.
/// Both vanish at `c = c0(tau)`.
pub fn tangency_residual(c: f64, tau: f64, fprime0: f64, d: f64) -> Result<(f64, f64)> {
    let q = CharacteristicQuery::new(c, tau, fprime0, d)?;
    let (lambda, value) = q.convex_minimum();
    Ok((value, q.real_slope(lambda)))
}

/// Smallest positive real root, or `None` when `min Delta_c > 0` (`c < c0`).
pub fn min_real_root(query: &CharacteristicQuery) -> Option<f64> {
    let (lambda_min, value) = query.convex_minimum();
    let scale = query.fprime0.max(1.0);
    if value > 1e-14 * scale {
        return None;
    }
    if value >= -1e-14 * scale {
        return Some(lambda_min);
    }
    // Delta(0) > 0 > Delta(lambda_min), Delta decreasing in between
    let (mut lo, mut hi) = (0.0, lambda_min);
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-6 * lambda_min {
            break;
        }
        if query.real(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let v = query.real(lambda);
        if v.abs() < 1e-12 {
            break;
        }
        let next = lambda - v / query.real_slope(lambda);
        lambda = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if query.real(lambda) > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    Some(lambda)
}

/// A root `alpha + i beta` of `Delta_c` in the strip `Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexRoot {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
}

impl ComplexRoot {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.alpha, self.beta)
    }
}

/// `max(50, ceil(100 tau))`
pub fn default_continuation_steps(tau: f64) -> usize {
    50usize.max((100.0 * tau).ceil() as usize)
}

/// Real and imaginary parts `(F1, F2)` of `Delta_c(alpha + i beta, tau)` and
/// their Jacobian.
fn split_system(c: f64, tau: f64, fprime0: f64, d: f64, alpha: f64, beta: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let ct = c * tau;
    let damp = fprime0 * (-ct * alpha).exp();
    let (sin, cos) = (ct * beta).sin_cos();
    let f1 = alpha * alpha - beta * beta - c * alpha - d + damp * cos;
    let f2 = 2.0 * alpha * beta - c * beta - damp * sin;
    let a = 2.0 * alpha - c - ct * damp * cos;
    let b = -2.0 * beta - ct * damp * sin;
    ([f1, f2], [[a, b], [-b, a]])
}

fn newton_polish(
    c: f64,
    tau: f64,
    fprime0: f64,
    d: f64,
    start: (f64, f64),
) -> Option<(f64, f64, f64)> {
    let (mut alpha, mut beta) = start;
    for _ in 0..MAX_NEWTON {
        let (f, j) = split_system(c, tau, fprime0, d, alpha, beta);
        let res = f[0].hypot(f[1]);
        if res < 1e-14 {
            return Some((alpha, beta, res));
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let da = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let db = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        alpha -= da;
        beta -= db;
        if !(alpha.is_finite() && beta.is_finite()) {
            return None;
        }
        if da.abs().max(db.abs()) < 1e-15 * (1.0 + alpha.abs() + beta.abs()) {
            let (f, _) = split_system(c, tau, fprime0, d, alpha, beta);
            return Some((alpha, beta, f[0].hypot(f[1])));
        }
    }
    let (f, _) = split_system(c, tau, fprime0, d, alpha, beta);
    let res = f[0].hypot(f[1]);
    (res < DEFAULT_TOL).then_some((alpha, beta, res))
}

fn outside_omega(c: f64, tau: f64, alpha: f64, beta: f64) -> bool {
    let ct = c * tau;
    alpha <= 0.0 || beta <= 0.0 || (ct > 0.0 && beta >= PI / ct)
}

/// Continues the `tau = 0` root `(c/2, sqrt(4(f'(0) - d) - c^2)/2)` to the
/// requested `tau` in `n_steps` increments, Newton-correcting the split real
/// system at each increment.
pub fn complex_root_in_omega(
    c: f64,
    tau: f64,
    fprime0: f64,
    d: f64,
    n_steps: usize,
) -> Result<ComplexRoot> {
    check_linear(tau, fprime0, d)?;
    let disc = 4.0 * (fprime0 - d) - c * c;
    if !(c > 0.0) || disc <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "complex root continuation needs 0 < c < 2 sqrt(f'(0) - d), got c = {c}"
        )));
    }
    let c0_tau = c0(tau, fprime0, d)?;
    if c >= c0_tau {
        return Err(Error::InvalidParameter(format!(
            "complex root in the strip needs c < c0(tau) = {c0_tau}, got {c}"
        )));
    }
    let mut alpha = 0.5 * c;
    let mut beta = 0.5 * disc.sqrt();
    let n_steps = n_steps.max(1);
    let mut current = 0.0;
    for k in 1..=n_steps {
        let target = tau * k as f64 / n_steps as f64;
        // halve the increment when Newton fails to converge
        let mut sub = 1usize;
        loop {
            let mut ok = true;
            let (mut a, mut b, mut t) = (alpha, beta, current);
            for s in 1..=sub {
                let ts = current + (target - current) * s as f64 / sub as f64;
                match newton_polish(c, ts, fprime0, d, (a, b)) {
                    Some((na, nb, _)) => {
                        if outside_omega(c, ts, na, nb) {
                            return Err(Error::OmegaExit { tau: ts, alpha: na, beta: nb });
                        }
                        a = na;
                        b = nb;
                        t = ts;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                alpha = a;
                beta = b;
                current = t;
                break;
            }
            sub *= 2;
            if sub > 1024 {
                return Err(Error::ConvergenceFailure(format!(
                    "Newton stalled while continuing the complex root to tau = {target}"
                )));
            }
        }
    }
    let query = CharacteristicQuery { c, tau, fprime0, d };
    let residual = delta(&query, Complex64::new(alpha, beta)).norm();
    if residual >= DEFAULT_TOL {
        return Err(Error::ConvergenceFailure(format!(
            "complex root residual {residual:e} above tolerance"
        )));
    }
    Ok(ComplexRoot { alpha, beta, residual })
}
