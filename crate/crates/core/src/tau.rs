// SPDX-License-Identifier: MIT OR Apache-2.0

//! Permutation calibration of the filter threshold.
//!
//! The residuals of an initial fit are permuted and added back to the fit,
//! the fitting procedure is rerun on each auxiliary series, and the largest
//! filter magnitude away from the original changepoints is recorded. The
//! threshold is an upper quantile of those maxima.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{fit_cv, DEFAULT_FOLDS};
use crate::error::{Error, Result};
use crate::filter::haar_filter;
use crate::fused::fused_lasso_1d;
use crate::metrics::{changepoints, default_jump_tol};
use crate::signal::{ChangepointSet, Signal};

/// A deterministic fitting procedure `y ↦ θ̃`.
pub trait Fitter: Sync {
    fn fit(&self, y: &Signal) -> Result<Signal>;

    /// Tolerance used to read changepoints off a fit.
    fn jump_tol(&self, theta: &[f64]) -> f64 {
        default_jump_tol(theta)
    }
}

impl<F> Fitter for F
where
    F: Fn(&Signal) -> Result<Signal> + Sync,
{
    fn fit(&self, y: &Signal) -> Result<Signal> {
        self(y)
    }
}

/// 1-D fused lasso with `λ` chosen by `k`-fold cross-validation on the
/// default grid.
#[derive(Clone, Copy, Debug)]
pub struct FusedCv {
    pub folds: usize,
}

impl Default for FusedCv {
    fn default() -> Self {
        FusedCv {
            folds: DEFAULT_FOLDS,
        }
    }
}

impl Fitter for FusedCv {
    fn fit(&self, y: &Signal) -> Result<Signal> {
        Ok(fit_cv(y, self.folds, None)?.0.theta_hat)
    }

    fn jump_tol(&self, _theta: &[f64]) -> f64 {
        0.0
    }
}

/// 1-D fused lasso at a fixed penalty.
#[derive(Clone, Copy, Debug)]
pub struct FusedFixed {
    pub lambda: f64,
}

impl Fitter for FusedFixed {
    fn fit(&self, y: &Signal) -> Result<Signal> {
        Ok(fused_lasso_1d(y, self.lambda)?.theta_hat)
    }

    fn jump_tol(&self, _theta: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauConfig {
    pub permutations: usize,
    pub bandwidth: usize,
    pub q: f64,
    pub seed: u64,
}

impl TauConfig {
    pub fn new(permutations: usize, bandwidth: usize, q: f64, seed: u64) -> Self {
        TauConfig {
            permutations,
            bandwidth,
            q,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.permutations == 0 {
            return Err(Error::invalid_input("need at least one permutation"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::invalid_input(format!(
                "q must lie in (0, 1), got {}",
                self.q
            )));
        }
        if self.bandwidth == 0 || n < 2 * self.bandwidth {
            return Err(Error::invalid_input(format!(
                "bandwidth {} is invalid for a signal of length {n}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSelection {
    pub tau_hat: f64,
    pub per_permutation_maxima: Vec<f64>,
    pub config: TauConfig,
}

/// Nearest-rank upper quantile: the smallest value that at least a fraction
/// `q` of the batch does not exceed.
pub fn upper_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty batch");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Largest `|F_i|` over locations farther than `b` from every point of
/// `s_tilde`, or 0 when no location qualifies.
pub fn max_filter_away_from(theta: &[f64], s_tilde: &ChangepointSet, b: usize) -> Result<f64> {
    let profile = haar_filter(theta, b)?;
    Ok(profile
        .iter()
        .filter(|&(i, _)| s_tilde.nearest_distance(i).is_none_or(|d| d > b))
        .map(|(_, f)| f.abs())
        .fold(0.0, f64::max))
}

/// Runs the calibration with an initial fit `theta_tilde = fitter(y)` that the
/// caller already has.
pub fn select_tau_with_fit(
    y: &Signal,
    theta_tilde: &Signal,
    fitter: &dyn Fitter,
    config: TauConfig,
) -> Result<TauSelection> {
    let n = y.len();
    config.validate(n)?;
    if theta_tilde.len() != n {
        return Err(Error::invalid_input("initial fit has the wrong length"));
    }
    let s_tilde = changepoints(theta_tilde, fitter.jump_tol(theta_tilde));
    let residuals: Vec<f64> = y
        .iter()
        .zip(theta_tilde.iter())
        .map(|(a, b)| a - b)
        .collect();

    let maxima = (1..=config.permutations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ k);
            let mut r = residuals.clone();
            r.shuffle(&mut rng);
            let aux: Vec<f64> = theta_tilde.iter().zip(&r).map(|(t, e)| t + e).collect();
            let refit = fitter.fit(&Signal::new(aux)?)?;
            max_filter_away_from(&refit, &s_tilde, config.bandwidth)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(TauSelection {
        tau_hat: upper_quantile(&maxima, config.q),
        per_permutation_maxima: maxima,
        config,
    })
}

/// Fits `y`, then calibrates the threshold by permutation.
pub fn select_tau(y: &Signal, fitter: &dyn Fitter, config: TauConfig) -> Result<TauSelection> {
    config.validate(y.len())?;
    let theta_tilde = fitter.fit(y)?;
    select_tau_with_fit(y, &theta_tilde, fitter, config)
}
