// SPDX-License-Identifier: MIT OR Apache-2.0

//! Haar-type post-processing filter and the filtered changepoint sets.
//!
//! With bandwidth `b`, the filter at location `i ∈ b..=n-b` is the mean of the
//! `b` values to the right of the gap minus the mean of the `b` values to its
//! left:
//!
//! ```text
//! F_i = (θ_{i+1} + … + θ_{i+b}) / b - (θ_{i-b+1} + … + θ_i) / b
//! ```
//!
//! Thresholds use `|F_i| >= τ`, so `τ = 0` keeps every valid location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::changepoints;
use crate::signal::ChangepointSet;

/// Filter values at locations `b..=n-b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub bandwidth: usize,
    pub n: usize,
    values: Vec<f64>,
}

impl FilterProfile {
    pub fn first_location(&self) -> usize {
        self.bandwidth
    }

    pub fn last_location(&self) -> usize {
        self.n - self.bandwidth
    }

    /// `F_i`, or `None` outside `b..=n-b`.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.bandwidth)
            .and_then(|k| self.values.get(k).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(location, F_location)` pairs in increasing location order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k + self.bandwidth, v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Locations with `|F_i| >= tau`.
    pub fn threshold(&self, tau: f64) -> ChangepointSet {
        let idx = self
            .iter()
            .filter(|(_, f)| f.abs() >= tau)
            .map(|(i, _)| i)
            .collect();
        ChangepointSet::from_sorted_unchecked(idx)
    }

    /// Members of `locations` with `|F_i| >= tau`; locations outside the
    /// profile are dropped.
    pub fn threshold_on(&self, locations: &ChangepointSet, tau: f64) -> ChangepointSet {
        let idx = locations
            .iter()
            .copied()
            .filter(|&i| self.get(i).is_some_and(|f| f.abs() >= tau))
            .collect();
        ChangepointSet::from_sorted_unchecked(idx)
    }
}

fn check_bandwidth(n: usize, b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::invalid_input("bandwidth must be at least 1"));
    }
    if n < 2 * b {
        return Err(Error::invalid_input(format!(
            "bandwidth {b} needs a signal of length at least {}, got {n}",
            2 * b
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid_input(format!(
            "threshold must be finite and >= 0, got {tau}"
        )))
    }
}

/// Evaluates the filter at every valid location in `O(n)` using prefix sums.
///
/// Windows that contain no jump of `theta` give exactly `0.0`.
pub fn haar_filter(theta: &[f64], b: usize) -> Result<FilterProfile> {
    let n = theta.len();
    check_bandwidth(n, b)?;
    // prefix[k] = θ_1 + … + θ_k (1-based), jumps[k] = #{j <= k : θ_j != θ_{j+1}}.
    let mut prefix = vec![0.0; n + 1];
    let mut jumps = vec![0usize; n];
    for k in 1..=n {
        prefix[k] = prefix[k - 1] + theta[k - 1];
        if k < n {
            jumps[k] = jumps[k - 1] + usize::from(theta[k - 1] != theta[k]);
        }
    }
    let bf = b as f64;
    let values = (b..=n - b)
        .map(|i| {
            // Jumps at positions i-b+1 ..= i+b-1 affect the window.
            if jumps[i + b - 1] == jumps[i - b] {
                0.0
            } else {
                ((prefix[i + b] - prefix[i]) - (prefix[i] - prefix[i - b])) / bf
            }
        })
        .collect();
    Ok(FilterProfile {
        bandwidth: b,
        n,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredSet {
    pub locations: ChangepointSet,
    pub tau: f64,
    pub bandwidth: usize,
    pub variant: Variant,
}

/// All locations whose filter magnitude reaches `tau`.
pub fn full_filter_set(theta: &[f64], b: usize, tau: f64) -> Result<FilteredSet> {
    check_tau(tau)?;
    let profile = haar_filter(theta, b)?;
    Ok(FilteredSet {
        locations: profile.threshold(tau),
        tau,
        bandwidth: b,
        variant: Variant::Full,
    })
}

/// Locations within `b..=n-b` that are a changepoint of `theta`, or sit
/// exactly `b` away from one, together with the two boundary locations.
pub fn candidate_set(theta: &[f64], b: usize, tol: f64) -> Result<ChangepointSet> {
    let n = theta.len();
    check_bandwidth(n, b)?;
    Ok(candidates_from(&changepoints(theta, tol), n, b))
}

pub(crate) fn candidates_from(s: &ChangepointSet, n: usize, b: usize) -> ChangepointSet {
    let (lo, hi) = (b, n - b);
    let mut idx = vec![lo, hi];
    for &t in s.iter() {
        for c in [t.checked_sub(b), Some(t), Some(t + b)]
            .into_iter()
            .flatten()
        {
            if (lo..=hi).contains(&c) {
                idx.push(c);
            }
        }
    }
    idx.sort_unstable();
    idx.dedup();
    ChangepointSet::from_sorted_unchecked(idx)
}

/// Thresholds the filter on the candidate set only.
pub fn reduced_filter_set(theta: &[f64], b: usize, tau: f64, tol: f64) -> Result<FilteredSet> {
    check_tau(tau)?;
    let profile = haar_filter(theta, b)?;
    let cand = candidates_from(&changepoints(theta, tol), theta.len(), b);
    Ok(FilteredSet {
        locations: profile.threshold_on(&cand, tau),
        tau,
        bandwidth: b,
        variant: Variant::Reduced,
    })
}

/// Local maxima of `|F|` with a tolerance of `1e-12 · max|F|` in every
/// comparison.
pub fn local_maxima(profile: &FilterProfile) -> ChangepointSet {
    local_maxima_with_tol(profile, 1e-12 * profile.max_abs())
}

/// Location `i` is a local maximum when `|F_i|` is at least both neighbours
/// and strictly above one of them. The end locations have a single neighbour
/// and must be strictly above it. Strict comparisons require a margin larger
/// than `tol`, and non-strict ones allow a shortfall of up to `tol`.
pub fn local_maxima_with_tol(profile: &FilterProfile, tol: f64) -> ChangepointSet {
    let f: Vec<f64> = profile.values.iter().map(|v| v.abs()).collect();
    let m = f.len();
    let gt = |a: f64, b: f64| a > b + tol;
    let ge = |a: f64, b: f64| a + tol >= b;
    let mut idx = Vec::new();
    if m >= 2 {
        for k in 0..m {
            let is_max = if k == 0 {
                gt(f[0], f[1])
            } else if k == m - 1 {
                gt(f[k], f[k - 1])
            } else {
                (gt(f[k], f[k - 1]) && ge(f[k], f[k + 1]))
                    || (ge(f[k], f[k - 1]) && gt(f[k], f[k + 1]))
            };
            if is_max {
                idx.push(k + profile.bandwidth);
            }
        }
    }
    ChangepointSet::from_sorted_unchecked(idx)
}
