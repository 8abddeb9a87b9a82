//! Thomas algorithm for tridiagonal systems.

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place:
/// on return `rhs` holds `x`. `lower[0]` and `upper[n-1]` are ignored.
/// `scratch` must have the same length as `diag`.
///
/// No pivoting; callers only pass diagonally dominant matrices.
pub fn solve_in_place(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() == n);
    if n == 0 {
        return;
    }
    let mut denom = diag[0];
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// LU factors of a fixed tridiagonal matrix, reused across many right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored {
    lower: Vec<f64>,
    inv_denom: Vec<f64>,
    upper_ratio: Vec<f64>,
}

impl Factored {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut inv_denom = vec![0.0; n];
        let mut upper_ratio = vec![0.0; n];
        if n > 0 {
            inv_denom[0] = 1.0 / diag[0];
            upper_ratio[0] = upper[0] * inv_denom[0];
            for i in 1..n {
                inv_denom[i] = 1.0 / (diag[i] - lower[i] * upper_ratio[i - 1]);
                upper_ratio[i] = upper[i] * inv_denom[i];
            }
        }
        Factored {
            lower: lower.to_vec(),
            inv_denom,
            upper_ratio,
        }
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_ratio[i] * rhs[i + 1];
        }
    }
}
