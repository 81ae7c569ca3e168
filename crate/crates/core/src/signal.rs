// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sample sequences, changepoint index sets and the extended distance type.
//!
//! All indices exposed by this module are 1-based: changepoint `i` denotes a
//! jump between positions `i` and `i + 1` of a signal of length `n`, so valid
//! changepoints lie in `1..=n-1`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite, nonempty sequence of real samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_input("signal must have at least one sample"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_input(format!(
                "signal value at position {} is not finite",
                pos + 1
            )));
        }
        Ok(Signal(values))
    }

    /// Builds a signal from values the caller already knows are finite and
    /// nonempty (solver outputs).
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Signal(values)
    }

    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Signal::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Signal::new(values)
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Signal::new(values).map_err(serde::de::Error::custom)
    }
}

/// Strictly increasing set of 1-based jump indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ChangepointSet(Vec<usize>);

impl ChangepointSet {
    pub fn empty() -> Self {
        ChangepointSet(Vec::new())
    }

    /// Validates that `indices` is strictly increasing and lies in `1..=n-1`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let set = ChangepointSet::from_indices(indices)?;
        if let Some(&last) = set.0.last() {
            if last + 1 > n {
                return Err(Error::invalid_input(format!(
                    "changepoint {last} out of range for a signal of length {n}"
                )));
            }
        }
        Ok(set)
    }

    /// Validates ordering and positivity without a length bound.
    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if indices.first() == Some(&0) {
            return Err(Error::invalid_input(
                "changepoint indices are 1-based; got 0",
            ));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid_input(
                "changepoint indices must be strictly increasing",
            ));
        }
        Ok(ChangepointSet(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        ChangepointSet(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &ChangepointSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// Distance from `index` to the closest member, `None` when empty.
    pub fn nearest_distance(&self, index: usize) -> Option<usize> {
        if self.0.is_empty() {
            return None;
        }
        let pos = self.0.partition_point(|&a| a < index);
        let mut best = usize::MAX;
        if pos < self.0.len() {
            best = best.min(self.0[pos].abs_diff(index));
        }
        if pos > 0 {
            best = best.min(self.0[pos - 1].abs_diff(index));
        }
        Some(best)
    }
}

impl Deref for ChangepointSet {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for ChangepointSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        ChangepointSet::from_indices(indices).map_err(serde::de::Error::custom)
    }
}

/// A nonnegative distance in index (or path-length) units, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedDistance {
    Finite(usize),
    Infinite,
}

impl ExtendedDistance {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedDistance::Finite(_))
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            ExtendedDistance::Finite(d) => Some(d),
            ExtendedDistance::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            ExtendedDistance::Finite(d) => d as f64,
            ExtendedDistance::Infinite => f64::INFINITY,
        }
    }

    /// `self <= bound` with `Infinite` exceeding every bound.
    pub fn within(self, bound: usize) -> bool {
        self <= ExtendedDistance::Finite(bound)
    }

    pub fn saturating_add(self, other: ExtendedDistance) -> ExtendedDistance {
        match (self, other) {
            (ExtendedDistance::Finite(a), ExtendedDistance::Finite(b)) => {
                ExtendedDistance::Finite(a.saturating_add(b))
            }
            _ => ExtendedDistance::Infinite,
        }
    }
}

impl PartialEq<usize> for ExtendedDistance {
    fn eq(&self, other: &usize) -> bool {
        *self == ExtendedDistance::Finite(*other)
    }
}

impl PartialOrd<usize> for ExtendedDistance {
    fn partial_cmp(&self, other: &usize) -> Option<Ordering> {
        Some(self.cmp(&ExtendedDistance::Finite(*other)))
    }
}

impl fmt::Display for ExtendedDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedDistance::Finite(d) => write!(f, "{d}"),
            ExtendedDistance::Infinite => f.write_str("inf"),
        }
    }
}

// JSON has no infinity; finite values are integers and +inf is the string "inf".
impl Serialize for ExtendedDistance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedDistance::Finite(d) => serializer.serialize_u64(*d as u64),
            ExtendedDistance::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedDistance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(d) => Ok(ExtendedDistance::Finite(d as usize)),
            Repr::Str(s) if s == "inf" => Ok(ExtendedDistance::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad distance {s:?}"))),
        }
    }
}

/// Parses newline-delimited decimal text, or a single-column CSV with an
/// optional `value` header. Blank lines are ignored.
pub fn parse_signal(text: &str) -> Result<Signal> {
    let mut values = Vec::new();
    let mut seen_first = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_first;
        seen_first = true;
        if first && line.trim_matches('"').eq_ignore_ascii_case("value") {
            continue;
        }
        let field = line.strip_suffix(',').unwrap_or(line).trim();
        if field.contains(',') {
            return Err(Error::invalid_input(format!(
                "line {}: expected a single column, got {line:?}",
                lineno + 1
            )));
        }
        let value: f64 = field.trim_matches('"').parse().map_err(|_| {
            Error::invalid_input(format!(
                "line {}: cannot parse {line:?} as a number",
                lineno + 1
            ))
        })?;
        values.push(value);
    }
    Signal::new(values)
}
