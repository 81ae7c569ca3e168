// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use fused_changepoint::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Projected gradient on the dual of the 1-D fused lasso,
/// `min_{|u| <= λ} ½‖y - Dᵀu‖²`, with step `1/4 <= 1/‖DDᵀ‖`.
pub fn fused_lasso_pg(y: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let mut u = vec![0.0; n - 1];
    let mut theta = y.to_vec();
    for _ in 0..iterations {
        for k in 0..n - 1 {
            u[k] = (u[k] + 0.25 * (theta[k] - theta[k + 1])).clamp(-lambda, lambda);
        }
        primal_from_dual_first(y, &u, &mut theta);
    }
    theta
}

// θ = y - Dᵀu with (Dθ)_k = θ_k - θ_{k+1}.
fn primal_from_dual_first(y: &[f64], u: &[f64], theta: &mut [f64]) {
    let n = y.len();
    for j in 0..n {
        let left = if j > 0 { u[j - 1] } else { 0.0 };
        let right = if j < n - 1 { u[j] } else { 0.0 };
        theta[j] = y[j] - (right - left);
    }
}

/// Accelerated projected gradient on the dual of linear trend filtering,
/// `min_{|u| <= λ} ½‖y - D₂ᵀu‖²`, with step `1/16 <= 1/‖D₂D₂ᵀ‖`.
pub fn trend_filter_fista(y: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return y.to_vec();
    }
    let m = n - 2;
    let primal = |u: &[f64]| -> Vec<f64> {
        let mut t = y.to_vec();
        for k in 0..m {
            t[k] -= u[k];
            t[k + 1] += 2.0 * u[k];
            t[k + 2] -= u[k];
        }
        t
    };
    let mut u = vec![0.0; m];
    let mut v = u.clone();
    let mut t_k = 1.0_f64;
    for _ in 0..iterations {
        let theta = primal(&v);
        let next: Vec<f64> = (0..m)
            .map(|k| {
                let d = theta[k] - 2.0 * theta[k + 1] + theta[k + 2];
                (v[k] + d / 16.0).clamp(-lambda, lambda)
            })
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        let w = (t_k - 1.0) / t_next;
        for k in 0..m {
            v[k] = next[k] + w * (next[k] - u[k]);
        }
        u = next;
        t_k = t_next;
    }
    primal(&u)
}

/// SSE of the least-squares line through `a1·x` (x >= 0) and `a2·x` (x < 0)
/// on `x = -r..=r`, by solving the 2x2 normal equations.
pub fn kink_sse_normal_equations(a1: f64, a2: f64, r: i64) -> f64 {
    let xs: Vec<f64> = (-r..=r).map(|x| x as f64).collect();
    let f: Vec<f64> = xs
        .iter()
        .map(|&x| if x >= 0.0 { a1 * x } else { a2 * x })
        .collect();
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sf: f64 = f.iter().sum();
    let sxf: f64 = xs.iter().zip(&f).map(|(x, v)| x * v).sum();
    let det = m * sxx - sx * sx;
    let intercept = (sxx * sf - sx * sxf) / det;
    let slope = (m * sxf - sx * sf) / det;
    xs.iter()
        .zip(&f)
        .map(|(x, v)| (v - intercept - slope * x).powi(2))
        .sum()
}

/// Direct window-mean evaluation of the Haar filter at 1-based location `i`.
pub fn haar_direct(theta: &[f64], b: usize, i: usize) -> f64 {
    let right: f64 = theta[i..i + b].iter().sum::<f64>() / b as f64;
    let left: f64 = theta[i - b..i].iter().sum::<f64>() / b as f64;
    right - left
}

/// All-pairs shortest path lengths by Floyd–Warshall (0-based nodes).
pub fn all_pairs(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.n_nodes();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(i, j) in g.edges() {
        d[i - 1][j - 1] = Some(1);
        d[j - 1][i - 1] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Brute-force `d_G(A|B)` over edge lists; `None` stands for infinity.
pub fn graph_screening_bruteforce(
    a: &[(usize, usize)],
    b: &[(usize, usize)],
    d: &[Vec<Option<usize>>],
) -> Option<usize> {
    let mut worst = 0;
    for &(p, q) in b {
        let best = a
            .iter()
            .flat_map(|&(s, t)| {
                [
                    d[p - 1][s - 1],
                    d[p - 1][t - 1],
                    d[q - 1][s - 1],
                    d[q - 1][t - 1],
                ]
            })
            .flatten()
            .min()?;
        worst = worst.max(best);
    }
    Some(worst)
}

/// Brute-force `d(A|B)` over integer sets; `None` stands for infinity.
pub fn screening_bruteforce(a: &[usize], b: &[usize]) -> Option<usize> {
    let mut worst = 0;
    for &x in b {
        let best = a.iter().map(|&y| x.abs_diff(y)).min()?;
        worst = worst.max(best);
    }
    Some(worst)
}

/// Random piecewise-constant vector of length `n` with about `k` jumps.
pub fn random_piecewise_constant(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let mut cuts: Vec<usize> = (0..k).map(|_| rng.random_range(1..n)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut level = rng.random_range(-3.0..3.0);
    let mut next = cuts.iter().peekable();
    (1..=n)
        .map(|i| {
            let v = level;
            if next.peek() == Some(&&i) {
                next.next();
                level = rng.random_range(-3.0..3.0);
            }
            v
        })
        .collect()
}

/// Random strictly increasing subset of `1..=n-1`.
pub fn random_changepoints(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let mut v: Vec<usize> = (0..k).map(|_| rng.random_range(1..n)).collect();
    v.sort_unstable();
    v.dedup();
    v
}
