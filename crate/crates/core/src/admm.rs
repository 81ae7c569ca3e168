// SPDX-License-Identifier: MIT OR Apache-2.0

//! ADMM for `min_θ ½‖y - θ‖² + λ‖Dθ‖₁` with a sparse operator `D`.
//!
//! The splitting is `z = Dθ`. The θ-update solves `(I + ρDᵀD)θ = y + ρDᵀ(z - u)`
//! with a banded Cholesky factor, which is exact and cheap whenever `D` couples
//! only nearby coordinates (second differences, chain and grid incidence).
//! Convergence is certified by the duality gap against the dual feasible point
//! `w = clip(ρu, ±λ)`, whose dual value is `½‖y‖² - ½‖y - Dᵀw‖²`.

use crate::error::{Error, Result};

/// Sparse operator stored row by row as `(column, coefficient)` pairs.
#[derive(Clone, Debug)]
pub(crate) struct SparseOperator {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseOperator {
    pub(crate) fn new(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        debug_assert!(rows.iter().flatten().all(|&(c, _)| c < n_cols));
        SparseOperator { n_cols, rows }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, v)| v * x[c]).sum();
        }
    }

    /// `out = Dᵀ w`.
    pub(crate) fn apply_transpose(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &wr) in self.rows.iter().zip(w) {
            for &(c, v) in row {
                out[c] += v * wr;
            }
        }
    }

    pub(crate) fn l1_norm_of_image(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum::<f64>().abs())
            .sum()
    }

    fn half_bandwidth(&self) -> usize {
        self.rows
            .iter()
            .filter_map(|row| {
                let lo = row.iter().map(|e| e.0).min()?;
                let hi = row.iter().map(|e| e.0).max()?;
                Some(hi - lo)
            })
            .max()
            .unwrap_or(0)
    }
}

/// Banded Cholesky factor of `I + ρDᵀD`; `band[i][k]` holds entry `(i, i-k)`.
struct BandedCholesky {
    width: usize,
    band: Vec<Vec<f64>>,
}

impl BandedCholesky {
    fn factor(op: &SparseOperator, rho: f64) -> Self {
        let n = op.n_cols;
        let width = op.half_bandwidth();
        let mut band = vec![vec![0.0_f64; width + 1]; n];
        for b in band.iter_mut() {
            b[0] = 1.0;
        }
        for row in &op.rows {
            for &(c1, v1) in row {
                for &(c2, v2) in row {
                    if c1 >= c2 {
                        band[c1][c1 - c2] += rho * v1 * v2;
                    }
                }
            }
        }
        // In-place band Cholesky, A = L Lᵀ.
        for i in 0..n {
            let j_start = i.saturating_sub(width);
            for j in j_start..=i {
                let mut sum = band[i][i - j];
                let k_start = j_start.max(j.saturating_sub(width));
                for k in k_start..j {
                    sum -= band[i][i - k] * band[j][j - k];
                }
                if i == j {
                    // A is I plus a PSD term, so the pivot stays >= 1 in exact
                    // arithmetic.
                    band[i][0] = sum.max(f64::MIN_POSITIVE).sqrt();
                } else {
                    band[i][i - j] = sum / band[j][0];
                }
            }
        }
        BandedCholesky { width, band }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let lo = i.saturating_sub(self.width);
            let s: f64 = (lo..i)
                .zip(&x[lo..i])
                .map(|(k, xk)| self.band[i][i - k] * xk)
                .sum();
            x[i] = (x[i] - s) / self.band[i][0];
        }
        for i in (0..n).rev() {
            let hi = (i + self.width + 1).min(n);
            let s: f64 = (i + 1..hi)
                .zip(&x[i + 1..hi])
                .map(|(k, xk)| self.band[k][k - i] * xk)
                .sum();
            x[i] = (x[i] - s) / self.band[i][0];
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct AdmmSettings {
    /// Relative duality-gap tolerance: stop once `gap <= tol (1 + |P|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub check_every: usize,
}

impl AdmmSettings {
    pub(crate) fn new(tol: f64, max_iter: usize) -> Self {
        AdmmSettings {
            tol,
            max_iter,
            relaxation: 1.6,
            check_every: 10,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn primal_objective(op: &SparseOperator, y: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(theta)
        .map(|(a, b)| 0.5 * (a - b) * (a - b))
        .sum();
    fit + lambda * op.l1_norm_of_image(theta)
}

pub(crate) fn solve(
    op: &SparseOperator,
    y: &[f64],
    lambda: f64,
    settings: AdmmSettings,
) -> Result<Vec<f64>> {
    let n = y.len();
    let m = op.n_rows();
    if lambda == 0.0 || m == 0 {
        return Ok(y.to_vec());
    }

    let y_norm2: f64 = y.iter().map(|v| v * v).sum();
    let mut rho = lambda;
    let mut chol = BandedCholesky::factor(op, rho);

    let mut theta = y.to_vec();
    let mut z = vec![0.0; m];
    op.apply(&theta, &mut z);
    let mut u = vec![0.0; m];
    let mut d_theta = vec![0.0; m];
    let mut z_old = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut buf_n = vec![0.0; n];
    let mut w = vec![0.0; m];

    let alpha = settings.relaxation;
    let mut last_gap = f64::INFINITY;
    let mut rescales = 0;

    for iter in 1..=settings.max_iter {
        // θ-update.
        for k in 0..m {
            w[k] = z[k] - u[k];
        }
        op.apply_transpose(&w, &mut rhs);
        for i in 0..n {
            rhs[i] = y[i] + rho * rhs[i];
        }
        chol.solve_in_place(&mut rhs);
        std::mem::swap(&mut theta, &mut rhs);

        // Relaxed z- and u-updates.
        op.apply(&theta, &mut d_theta);
        z_old.copy_from_slice(&z);
        let thresh = lambda / rho;
        let mut r_norm2 = 0.0;
        for k in 0..m {
            let relaxed = alpha * d_theta[k] + (1.0 - alpha) * z_old[k];
            z[k] = soft_threshold(relaxed + u[k], thresh);
            u[k] += relaxed - z[k];
            r_norm2 += (d_theta[k] - z[k]).powi(2);
        }

        if iter % settings.check_every == 0 || iter == settings.max_iter {
            // Dual feasible point and gap.
            for k in 0..m {
                w[k] = (rho * u[k]).clamp(-lambda, lambda);
            }
            op.apply_transpose(&w, &mut buf_n);
            let mut resid2 = 0.0;
            for i in 0..n {
                buf_n[i] = y[i] - buf_n[i];
                resid2 += buf_n[i] * buf_n[i];
            }
            let dual = 0.5 * y_norm2 - 0.5 * resid2;
            let p_theta = primal_objective(op, y, &theta, lambda);
            let p_dual = primal_objective(op, y, &buf_n, lambda);
            let (best_p, best_is_dual) = if p_dual < p_theta {
                (p_dual, true)
            } else {
                (p_theta, false)
            };
            let gap = (best_p - dual).max(0.0);
            last_gap = gap;
            if gap <= settings.tol * (1.0 + best_p.abs()) {
                return Ok(if best_is_dual { buf_n } else { theta });
            }

            // Residual balancing, a bounded number of times.
            if iter % 50 == 0 && rescales < 30 {
                let mut s2 = 0.0;
                for k in 0..m {
                    w[k] = z[k] - z_old[k];
                }
                op.apply_transpose(&w, &mut buf_n);
                for v in &buf_n {
                    s2 += (rho * v).powi(2);
                }
                let (r, s) = (r_norm2.sqrt(), s2.sqrt());
                let factor = if r > 10.0 * s {
                    2.0
                } else if s > 10.0 * r {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    for v in u.iter_mut() {
                        *v /= factor;
                    }
                    chol = BandedCholesky::factor(op, rho);
                    rescales += 1;
                }
            }
        }
    }
    Err(Error::Convergence {
        iterations: settings.max_iter,
        gap: last_gap,
    })
}
