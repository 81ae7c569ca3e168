// SPDX-License-Identifier: MIT OR Apache-2.0

//! Linear trend filtering: `min_θ ½‖y - θ‖² + λ Σ |θ_i - 2θ_{i+1} + θ_{i+2}|`.

use serde::{Deserialize, Serialize};

use crate::admm::{self, AdmmSettings, SparseOperator};
use crate::error::{Error, Result};
use crate::metrics::knots2;
use crate::signal::{ChangepointSet, Signal};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub theta_hat: Signal,
    pub lambda: f64,
    pub objective: f64,
}

impl TrendFit {
    /// Slope changes at the iterative-solver tolerance `1e-6 (1 + max|θ̂|)`.
    pub fn knots(&self) -> ChangepointSet {
        knots2(&self.theta_hat, knot_tol(&self.theta_hat))
    }
}

pub fn knot_tol(theta: &[f64]) -> f64 {
    let max_abs = theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-6 * (1.0 + max_abs)
}

pub(crate) fn second_difference_operator(n: usize) -> SparseOperator {
    let rows = (0..n.saturating_sub(2))
        .map(|i| vec![(i, 1.0), (i + 1, -2.0), (i + 2, 1.0)])
        .collect();
    SparseOperator::new(n, rows)
}

pub fn trend_objective(y: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(theta)
        .map(|(a, b)| 0.5 * (a - b) * (a - b))
        .sum();
    fit + lambda * crate::metrics::tv2(theta)
}

pub fn trend_filter_linear(y: &Signal, lambda: f64, tol: f64, max_iter: usize) -> Result<TrendFit> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid_input(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid_input(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if y.len() <= 2 || lambda == 0.0 {
        return Ok(TrendFit {
            theta_hat: y.clone(),
            lambda,
            objective: 0.0,
        });
    }
    let op = second_difference_operator(y.len());
    let out = admm::solve(&op, y, lambda, AdmmSettings::new(tol, max_iter))?;
    let objective = trend_objective(y, &out, lambda);
    Ok(TrendFit {
        theta_hat: Signal::from_vec_unchecked(out),
        lambda,
        objective,
    })
}

/// Least-squares line `ã x + b̃` through the kinked function
/// `f(x) = a₁x (x ≥ 0), a₂x (x < 0)` sampled at `x = -r..=r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkFit {
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub sse: f64,
}

pub fn piecewise_linear_lsq(a1: f64, a2: f64, r: u64) -> Result<KinkFit> {
    if r == 0 {
        return Err(Error::invalid_input("r must be at least 1"));
    }
    let r = r as f64;
    let d = a1 - a2;
    let m = 2.0 * r + 1.0;
    let a_tilde = 0.5 * (a1 + a2);
    let b_tilde = d * r * (r + 1.0) / (2.0 * m);
    // f - (ãx + b̃) = (d/2)(|x| - mean|x|), so the SSE is (d/2)² times the
    // centred sum of squares of |x|.
    let centred = r * (r + 1.0) * m / 3.0 - (r * (r + 1.0)).powi(2) / m;
    let sse = 0.25 * d * d * centred;
    Ok(KinkFit {
        a_tilde,
        b_tilde,
        sse,
    })
}

/// The lower bound `(a₁ - a₂)² · 13r³/24` on the kink-fit residual.
pub fn kink_sse_lower_bound(a1: f64, a2: f64, r: u64) -> f64 {
    (a1 - a2).powi(2) * 13.0 * (r as f64).powi(3) / 24.0
}
