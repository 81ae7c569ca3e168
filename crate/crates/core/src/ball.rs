// SPDX-License-Identifier: MIT OR Apache-2.0

//! Extremes of `|aᵀx|` over the Euclidean ball `‖x - c‖₂ <= r`.

use crate::error::{Error, Result};

fn check(a: &[f64], c: &[f64], r: f64) -> Result<(f64, f64)> {
    if a.len() != c.len() {
        return Err(Error::invalid_input(format!(
            "vector lengths differ: {} and {}",
            a.len(),
            c.len()
        )));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid_input(format!(
            "radius must be finite and >= 0, got {r}"
        )));
    }
    let dot: f64 = a.iter().zip(c).map(|(x, y)| x * y).sum();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((dot, norm))
}

/// `max |aᵀx| = |aᵀc| + r‖a‖₂`.
pub fn ball_linear_max(a: &[f64], c: &[f64], r: f64) -> Result<f64> {
    let (dot, norm) = check(a, c, r)?;
    Ok(dot.abs() + r * norm)
}

/// `min |aᵀx| = |aᵀc| - r‖a‖₂`, defined only when that is nonnegative.
pub fn ball_linear_min(a: &[f64], c: &[f64], r: f64) -> Result<f64> {
    let (dot, norm) = check(a, c, r)?;
    let v = dot.abs() - r * norm;
    if v < 0.0 {
        return Err(Error::invalid_input(format!(
            "the ball reaches the hyperplane aᵀx = 0 (|aᵀc| - r‖a‖ = {v})"
        )));
    }
    Ok(v)
}

/// A point of the ball attaining [`ball_linear_max`]: `c + r·sign(aᵀc)·a/‖a‖`.
/// When `aᵀc = 0` the positive direction is used; when `a = 0`, `c` itself.
pub fn ball_maximizer(a: &[f64], c: &[f64], r: f64) -> Result<Vec<f64>> {
    let (dot, norm) = check(a, c, r)?;
    if norm == 0.0 {
        return Ok(c.to_vec());
    }
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    Ok(c.iter()
        .zip(a)
        .map(|(ci, ai)| ci + r * s * ai / norm)
        .collect())
}
