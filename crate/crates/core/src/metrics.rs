// SPDX-License-Identifier: MIT OR Apache-2.0

//! Changepoint extraction, set distances and signal diagnostics.

use crate::signal::{ChangepointSet, ExtendedDistance, Signal};

/// Jump tolerance for outputs of iterative solvers: `1e-9 * (1 + max|θ|)`.
///
/// Exact solvers (the 1-D dynamic program) fuse values bit-for-bit and should
/// use a tolerance of zero instead.
pub fn default_jump_tol(theta: &[f64]) -> f64 {
    let max_abs = theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-9 * (1.0 + max_abs)
}

/// Indices `i` (1-based) with `|θ_i - θ_{i+1}| > tol`.
pub fn changepoints(theta: &[f64], tol: f64) -> ChangepointSet {
    let idx = theta
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() > tol)
        .map(|(i, _)| i + 1)
        .collect();
    ChangepointSet::from_sorted_unchecked(idx)
}

/// Discrete total variation `Σ |x_i - x_{i+1}|`.
pub fn tv(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
}

/// One-sided screening distance `d(A|B) = max_{b∈B} min_{a∈A} |a - b|`.
///
/// An empty `B` gives 0 (empty max); an empty `A` with nonempty `B` gives
/// `Infinite` (empty min).
pub fn screening_distance(a: &ChangepointSet, b: &ChangepointSet) -> ExtendedDistance {
    let mut worst = 0;
    for &bi in b.iter() {
        match a.nearest_distance(bi) {
            Some(d) => worst = worst.max(d),
            None => return ExtendedDistance::Infinite,
        }
    }
    ExtendedDistance::Finite(worst)
}

/// Hausdorff distance `max{d(A|B), d(B|A)}`; zero when both sets are empty.
pub fn hausdorff(a: &ChangepointSet, b: &ChangepointSet) -> ExtendedDistance {
    screening_distance(a, b).max(screening_distance(b, a))
}

/// Smallest segment length `W_n` induced by `s0` on `1..=n`, with the
/// boundary conventions `t_0 = 0` and `t_{s0+1} = n`.
pub fn min_spacing(s0: &ChangepointSet, n: usize) -> usize {
    let mut prev = 0;
    let mut best = usize::MAX;
    for &t in s0.iter().chain(std::iter::once(&n)) {
        best = best.min(t - prev);
        prev = t;
    }
    best
}

/// Smallest jump magnitude `H_n` of `theta0` over `s0`; `+∞` when `s0` is empty.
pub fn min_gap(theta0: &[f64], s0: &ChangepointSet) -> f64 {
    s0.iter()
        .map(|&i| (theta0[i] - theta0[i - 1]).abs())
        .fold(f64::INFINITY, f64::min)
}

fn second_differences(x: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
    // (1-based centre index, x_{i-1} - 2 x_i + x_{i+1})
    x.windows(3)
        .enumerate()
        .map(|(k, w)| (k + 2, w[0] - 2.0 * w[1] + w[2]))
}

/// Second-order total variation `Σ_{i=2}^{n-1} |x_{i-1} - 2x_i + x_{i+1}|`.
pub fn tv2(x: &[f64]) -> f64 {
    second_differences(x).map(|(_, d)| d.abs()).sum()
}

/// Knots (slope changes): centres `i ∈ 2..=n-1` whose second difference
/// exceeds `tol` in magnitude.
pub fn knots2(theta: &[f64], tol: f64) -> ChangepointSet {
    let idx = second_differences(theta)
        .filter(|(_, d)| d.abs() > tol)
        .map(|(i, _)| i)
        .collect();
    ChangepointSet::from_sorted_unchecked(idx)
}

/// Smallest second-difference magnitude over the exact knots of `theta0`.
pub fn min_gap2(theta0: &[f64]) -> f64 {
    second_differences(theta0)
        .filter(|(_, d)| *d != 0.0)
        .map(|(_, d)| d.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Scaled squared error `‖a - b‖²_n = ‖a - b‖²₂ / n`.
pub fn mean_squared_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Convenience wrapper returning changepoints of a [`Signal`] at the default
/// iterative-solver tolerance.
pub fn default_changepoints(theta: &Signal) -> ChangepointSet {
    changepoints(theta, default_jump_tol(theta))
}
