// SPDX-License-Identifier: MIT OR Apache-2.0

//! Lower interpolants.
//!
//! Given changepoints `t_1 < … < t_s` (with `t_0 = 0`, `t_{s+1} = n`) the
//! blocks are `(t_i, t_{i+1}]`. A vector is *piecewise monotone* for these
//! blocks when every block splits at some `t'_i` into a falling piece
//! `(t_i, t'_i]`, where `|z|` does not increase and the signs agree with the
//! first entry of the block, and a rising piece `(t'_i, t_{i+1}]`, where `|z|`
//! does not decrease and the signs agree with the last entry.
//!
//! [`lower_interpolant`] builds such a `z` from any `x`, dominated by `x`
//! entrywise and equal to it at both ends of every block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChangepointSet, Signal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolantResult {
    pub z: Signal,
    /// Switch point `t'_i` of each block (1-based position).
    pub switch_points: Vec<usize>,
    /// Blocks as inclusive 1-based `(first, last)` positions.
    pub blocks: Vec<(usize, usize)>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Inclusive 1-based blocks cut by `s0` on `1..=n`.
pub fn blocks(s0: &ChangepointSet, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(s0.len() + 1);
    let mut start = 1;
    for &t in s0.iter().chain(std::iter::once(&n)) {
        out.push((start, t));
        start = t + 1;
    }
    out
}

fn check_set(s0: &ChangepointSet, n: usize) -> Result<()> {
    match s0.last() {
        Some(&t) if t >= n => Err(Error::invalid_input(format!(
            "changepoint {t} out of range for a signal of length {n}"
        ))),
        _ => Ok(()),
    }
}

/// Returns the block values and the 1-based switch offset `j'`.
fn interpolate_block(x: &[f64]) -> (Vec<f64>, usize) {
    let len = x.len();
    if len == 1 {
        return (x.to_vec(), 1);
    }
    let gp = sign(x[0]);
    let gm = sign(x[len - 1]);

    // z⁺: running minimum from the left, z⁻: from the right.
    let mut plus = vec![0.0; len];
    let mut run = f64::INFINITY;
    for j in 0..len {
        run = run.min((gp * x[j]).max(0.0));
        plus[j] = gp * run;
    }
    let mut minus = vec![0.0; len];
    let mut run = f64::INFINITY;
    for j in (0..len).rev() {
        run = run.min((gm * x[j]).max(0.0));
        minus[j] = gm * run;
    }

    let m = plus[len - 1].abs();
    let first_min = plus
        .iter()
        .position(|v| v.abs() == m)
        .expect("minimum is attained");
    // 1-based j' = max(1, k⁺ - 1) with k⁺ = first_min + 1.
    let jp = first_min.max(1);
    let mut z = plus;
    z[jp..].copy_from_slice(&minus[jp..]);
    (z, jp)
}

/// Builds the lower interpolant of `x` for the blocks of `s0`.
pub fn lower_interpolant(x: &Signal, s0: &ChangepointSet) -> Result<InterpolantResult> {
    let n = x.len();
    check_set(s0, n)?;
    let blocks = blocks(s0, n);
    let mut z = Vec::with_capacity(n);
    let mut switch_points = Vec::with_capacity(blocks.len());
    for &(a, b) in &blocks {
        let (zb, jp) = interpolate_block(&x[a - 1..b]);
        z.extend(zb);
        switch_points.push(a - 1 + jp);
    }
    Ok(InterpolantResult {
        z: Signal::from_vec_unchecked(z),
        switch_points,
        blocks,
    })
}

fn block_in_class(z: &[f64]) -> bool {
    let len = z.len();
    let a: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let (s_first, s_last) = (sign(z[0]), sign(z[len - 1]));
    // ok_left[k]: on 0..=k, |z| does not increase and signs agree with z[0].
    let mut ok_left = vec![false; len];
    ok_left[0] = true;
    for k in 1..len {
        ok_left[k] = ok_left[k - 1] && a[k] <= a[k - 1] && s_first * sign(z[k]) >= 0.0;
    }
    // ok_right[k]: on k..len, |z| does not decrease and signs agree with the
    // last entry; ok_right[len] covers the empty piece.
    let mut ok_right = vec![true; len + 1];
    for k in (0..len).rev() {
        let rising = k + 1 == len || a[k] <= a[k + 1];
        ok_right[k] = ok_right[k + 1] && rising && s_last * sign(z[k]) >= 0.0;
    }
    (0..len).any(|k| ok_left[k] && ok_right[k + 1])
}

/// Whether `z` is piecewise monotone for the blocks of `s0`, trying every
/// switch point in each block.
pub fn check_class_m(z: &[f64], s0: &ChangepointSet) -> bool {
    if z.is_empty() || check_set(s0, z.len()).is_err() {
        return false;
    }
    blocks(s0, z.len())
        .iter()
        .all(|&(a, b)| block_in_class(&z[a - 1..b]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Relation {
    fn equal(lhs: f64, rhs: f64, tol: f64) -> Self {
        Relation {
            lhs,
            rhs,
            pass: (lhs - rhs).abs() <= tol,
        }
    }

    fn at_most(lhs: f64, rhs: f64, tol: f64) -> Self {
        Relation {
            lhs,
            rhs,
            pass: lhs <= rhs + tol,
        }
    }
}

/// The five norm relations a lower interpolant satisfies, writing `D_S` for
/// differences across changepoints and `D_{-S}` for the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolantReport {
    /// `‖D_{-S}x‖₁ = ‖D_{-S}z‖₁ + ‖D_{-S}(x - z)‖₁`
    pub split_off_support: Relation,
    /// `‖D_S x‖₁ = ‖D_S z‖₁`
    pub jumps_preserved: Relation,
    /// `‖D_S z‖₁ <= ‖D_{-S}z‖₁ + 4 √(s/W) ‖z‖₂`
    pub jumps_bounded: Relation,
    /// `‖z‖₂ <= ‖x‖₂`
    pub z_norm: Relation,
    /// `‖x - z‖₂ <= ‖x‖₂`
    pub residual_norm: Relation,
    pub tolerance: f64,
}

impl InterpolantReport {
    pub fn all_pass(&self) -> bool {
        self.relations().iter().all(|(_, r)| r.pass)
    }

    pub fn relations(&self) -> [(&'static str, Relation); 5] {
        [
            ("split_off_support", self.split_off_support),
            ("jumps_preserved", self.jumps_preserved),
            ("jumps_bounded", self.jumps_bounded),
            ("z_norm", self.z_norm),
            ("residual_norm", self.residual_norm),
        ]
    }
}

/// Evaluates both sides of every relation at tolerance `1e-9 (1 + ‖x‖₂)`.
/// `w_n` is the minimum block length.
pub fn verify_interpolant_properties(
    x: &[f64],
    z: &[f64],
    s0: &ChangepointSet,
    w_n: usize,
) -> Result<InterpolantReport> {
    let n = x.len();
    if z.len() != n {
        return Err(Error::invalid_input("x and z have different lengths"));
    }
    check_set(s0, n)?;
    if w_n == 0 {
        return Err(Error::invalid_input("minimum spacing must be positive"));
    }
    let (mut dx_off, mut dz_off, mut dr_off, mut dx_on, mut dz_on) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 1..n {
        let dx = (x[j] - x[j - 1]).abs();
        let dz = (z[j] - z[j - 1]).abs();
        if s0.contains(j) {
            dx_on += dx;
            dz_on += dz;
        } else {
            let dr = ((x[j] - z[j]) - (x[j - 1] - z[j - 1])).abs();
            dx_off += dx;
            dz_off += dz;
            dr_off += dr;
        }
    }
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|a| a * a).sum::<f64>().sqrt();
    let x_norm = norm(&mut x.iter().copied());
    let z_norm = norm(&mut z.iter().copied());
    let r_norm = norm(&mut x.iter().zip(z).map(|(a, b)| a - b));
    let tol = 1e-9 * (1.0 + x_norm);
    let slack = 4.0 * (s0.len() as f64 / w_n as f64).sqrt() * z_norm;
    Ok(InterpolantReport {
        split_off_support: Relation::equal(dx_off, dz_off + dr_off, tol),
        jumps_preserved: Relation::equal(dx_on, dz_on, tol),
        jumps_bounded: Relation::at_most(dz_on, dz_off + slack, tol),
        z_norm: Relation::at_most(z_norm, x_norm, tol),
        residual_norm: Relation::at_most(r_norm, x_norm, tol),
        tolerance: tol,
    })
}
