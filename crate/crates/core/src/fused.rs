// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact 1-D fused lasso (total variation denoising).
//!
//! Solves `min_θ ½ Σ (y_i - θ_i)² + λ Σ |θ_i - θ_{i+1}|` with a linear-time
//! dynamic program. The forward pass carries the derivative of the partial
//! minimisation message as a piecewise-linear function stored through its
//! knots; each step clips it to `[-λ, λ]`, recording the two clip points. The
//! backward pass recovers the minimiser by clamping the next coordinate into
//! those intervals, so fused coordinates come out bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedLassoFit {
    pub theta_hat: Signal,
    pub lambda: f64,
    /// `½‖y - θ̂‖² + λ TV(θ̂)`.
    pub objective: f64,
}

/// `½‖y - θ‖² + λ Σ|θ_i - θ_{i+1}|`.
pub fn fused_objective(y: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(theta)
        .map(|(a, b)| 0.5 * (a - b) * (a - b))
        .sum();
    fit + lambda * crate::metrics::tv(theta)
}

/// Smallest `λ` whose solution is the constant mean: the largest absolute
/// partial sum of the centred data.
pub fn lambda_max(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0_f64;
    let mut best = 0.0_f64;
    for v in &y[..n - 1] {
        acc += v - mean;
        best = best.max(acc.abs());
    }
    best
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid_input(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// Solves the 1-D fused lasso exactly.
pub fn fused_lasso_1d(y: &Signal, lambda: f64) -> Result<FusedLassoFit> {
    check_lambda(lambda)?;
    let theta = solve_dp(y, lambda);
    let objective = fused_objective(y, &theta, lambda);
    Ok(FusedLassoFit {
        theta_hat: Signal::from_vec_unchecked(theta),
        lambda,
        objective,
    })
}

/// Raw solver on a slice. `y` must be finite and `lambda >= 0`.
pub(crate) fn solve_dp(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    if n <= 1 || lambda == 0.0 {
        return y.to_vec();
    }

    // Knot positions and the slope/intercept increments of the message
    // derivative at each knot. The live knots occupy `lo..=hi` of a buffer
    // of length 2n; the window only grows outward by one slot per step.
    let mut knot = vec![0.0_f64; 2 * n];
    let mut slope = vec![0.0_f64; 2 * n];
    let mut icpt = vec![0.0_f64; 2 * n];
    let mut clip_lo = vec![0.0_f64; n - 1];
    let mut clip_hi = vec![0.0_f64; n - 1];

    clip_lo[0] = y[0] - lambda;
    clip_hi[0] = y[0] + lambda;
    let mut l = n - 1;
    let mut r = n;
    knot[l] = clip_lo[0];
    knot[r] = clip_hi[0];
    slope[l] = 1.0;
    icpt[l] = lambda - y[0];
    slope[r] = -1.0;
    icpt[r] = y[0] + lambda;

    for k in 1..n - 1 {
        // Scan up from the left until the derivative exceeds -λ.
        let mut a_lo = 1.0;
        let mut b_lo = -lambda - y[k];
        let mut lo = l;
        while lo <= r {
            if a_lo * knot[lo] + b_lo > -lambda {
                break;
            }
            a_lo += slope[lo];
            b_lo += icpt[lo];
            lo += 1;
        }
        clip_lo[k] = (-lambda - b_lo) / a_lo;
        l = lo - 1;
        knot[l] = clip_lo[k];

        // Scan down from the right until the derivative drops below λ.
        let mut a_hi = -1.0;
        let mut b_hi = -lambda + y[k];
        let mut hi = r as isize;
        while hi >= l as isize {
            let h = hi as usize;
            if -a_hi * knot[h] - b_hi < lambda {
                break;
            }
            a_hi += slope[h];
            b_hi += icpt[h];
            hi -= 1;
        }
        clip_hi[k] = (lambda + b_hi) / (-a_hi);

        r = (hi + 1) as usize;
        knot[r] = clip_hi[k];
        slope[l] = a_lo;
        icpt[l] = b_lo + lambda;
        slope[r] = a_hi;
        icpt[r] = b_hi + lambda;
    }

    // Last coordinate: zero of the final derivative.
    let mut a = 1.0;
    let mut b = -lambda - y[n - 1];
    let mut lo = l;
    while lo <= r {
        if a * knot[lo] + b > 0.0 {
            break;
        }
        a += slope[lo];
        b += icpt[lo];
        lo += 1;
    }
    let mut theta = vec![0.0; n];
    theta[n - 1] = -b / a;
    for k in (0..n - 1).rev() {
        let next = theta[k + 1];
        theta[k] = if next > clip_hi[k] {
            clip_hi[k]
        } else if next < clip_lo[k] {
            clip_lo[k]
        } else {
            next
        };
    }
    theta
}

/// Certifies optimality of `fit` for data `y`.
///
/// Builds the dual vector `s ∈ [-1, 1]^{n-1}` from the residual partial sums
/// (forcing `s_i = sign(θ̂_i - θ̂_{i+1})` on jumps) and checks that
/// `y - θ̂ = λ Dᵀ s` holds componentwise within `tol`. Coordinates closer than
/// the default jump tolerance count as fused.
pub fn check_kkt(y: &[f64], fit: &FusedLassoFit, tol: f64) -> bool {
    let theta = fit.theta_hat.values();
    if y.len() != theta.len() {
        return false;
    }
    let lambda = fit.lambda;
    let n = y.len();
    let jump_tol = crate::metrics::default_jump_tol(theta);

    // With D_i θ = θ_{i+1} - θ_i, (Dᵀ s)_j = s_{j-1} - s_j, so the partial
    // sums of the residual satisfy c_j = -λ s_j for an exact certificate.
    let mut s = vec![0.0_f64; n.saturating_sub(1)];
    let mut c = 0.0;
    for j in 0..n.saturating_sub(1) {
        c += y[j] - theta[j];
        let diff = theta[j] - theta[j + 1];
        s[j] = if diff.abs() > jump_tol {
            -diff.signum()
        } else if lambda > 0.0 {
            (-c / lambda).clamp(-1.0, 1.0)
        } else {
            0.0
        };
    }
    (0..n).all(|j| {
        let prev = if j > 0 { s[j - 1] } else { 0.0 };
        let cur = if j + 1 < n { s[j] } else { 0.0 };
        let resid = (y[j] - theta[j]) - lambda * (prev - cur);
        resid.abs() <= tol
    })
}
