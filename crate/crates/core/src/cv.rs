// SPDX-License-Identifier: MIT OR Apache-2.0

//! K-fold cross-validation for the fused lasso penalty.
//!
//! Folds are index strides: fold `j` holds the 0-based positions `i` with
//! `i % k == j`. For each fold the solver runs on the remaining points as a
//! shorter sequence, and every held-out point is predicted by linear
//! interpolation between its nearest fitted neighbours (the nearest fitted
//! value at the boundary).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fused::{fused_lasso_1d, lambda_max, solve_dp, FusedLassoFit};
use crate::signal::Signal;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_GRID_SIZE: usize = 50;
/// Lower end of the default grid relative to `λ_max`.
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

/// Geometric grid of `size` points from `ratio · λ_max(y)` to `λ_max(y)`,
/// ascending. A constant signal yields the single point `0`.
pub fn geometric_lambda_grid(y: &[f64], size: usize, ratio: f64) -> Vec<f64> {
    let top = lambda_max(y);
    if top == 0.0 || size == 0 {
        return vec![0.0];
    }
    if size == 1 {
        return vec![top];
    }
    let lo = (top * ratio).ln();
    let hi = top.ln();
    (0..size)
        .map(|i| {
            if i + 1 == size {
                top
            } else {
                (lo + (hi - lo) * i as f64 / (size - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn default_lambda_grid(y: &[f64]) -> Vec<f64> {
    geometric_lambda_grid(y, DEFAULT_GRID_SIZE, DEFAULT_GRID_RATIO)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Candidate penalties in the order supplied.
    pub grid: Vec<f64>,
    /// Total squared held-out prediction error per grid point.
    pub errors: Vec<f64>,
    pub selected: f64,
}

fn validate(n: usize, grid: &[f64], k: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid_input("lambda grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::invalid_input(format!("invalid grid value {bad}")));
    }
    if k < 2 {
        return Err(Error::invalid_input(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if n < 2 * k {
        return Err(Error::invalid_input(format!(
            "{k}-fold cross-validation needs n >= {}, got n = {n}",
            2 * k
        )));
    }
    Ok(())
}

/// Held-out squared error of one fold for every grid value.
fn fold_errors(y: &[f64], grid: &[f64], k: usize, fold: usize) -> Vec<f64> {
    let n = y.len();
    let train_pos: Vec<usize> = (0..n).filter(|i| i % k != fold).collect();
    let train_y: Vec<f64> = train_pos.iter().map(|&i| y[i]).collect();
    grid.iter()
        .map(|&lambda| {
            let fitted = solve_dp(&train_y, lambda);
            let mut err = 0.0;
            for i in (fold..n).step_by(k) {
                let right = train_pos.partition_point(|&p| p < i);
                let pred = match (right.checked_sub(1), train_pos.get(right)) {
                    (Some(l), Some(&rp)) => {
                        let lp = train_pos[l];
                        let w = (i - lp) as f64 / (rp - lp) as f64;
                        (1.0 - w) * fitted[l] + w * fitted[right]
                    }
                    (Some(l), None) => fitted[l],
                    (None, Some(_)) => fitted[right],
                    (None, None) => unreachable!("training set is nonempty"),
                };
                err += (y[i] - pred) * (y[i] - pred);
            }
            err
        })
        .collect()
}

/// Selects `λ` from `grid` by `k`-fold cross-validation.
///
/// Grid values whose error is within a relative `1e-12` (plus an absolute
/// floor at machine precision of `Σ y²`) of the minimum count as tied, and
/// ties go to the largest such `λ`.
pub fn cv_select_lambda(y: &Signal, grid: &[f64], k: usize) -> Result<CvResult> {
    validate(y.len(), grid, k)?;
    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|fold| fold_errors(y, grid, k, fold))
        .collect();
    let errors: Vec<f64> = (0..grid.len())
        .map(|g| per_fold.iter().map(|f| f[g]).sum())
        .collect();

    let min_err = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let slack = 1e-12 * min_err + f64::EPSILON * scale;
    let selected = grid
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e <= min_err + slack)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(CvResult {
        grid: grid.to_vec(),
        errors,
        selected,
    })
}

/// Cross-validates on the default grid and refits on all of `y`.
pub fn fit_cv(y: &Signal, k: usize, grid: Option<&[f64]>) -> Result<(FusedLassoFit, CvResult)> {
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = default_lambda_grid(y);
            &default_grid
        }
    };
    let cv = cv_select_lambda(y, grid, k)?;
    let fit = fused_lasso_1d(y, cv.selected)?;
    Ok((fit, cv))
}
