// SPDX-License-Identifier: MIT OR Apache-2.0

//! Graph fused lasso, edge changepoint sets and graph distances.
//!
//! Node ids are 1-based. Edges are unordered and stored as `(i, j)` with
//! `i < j`.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{self, AdmmSettings, SparseOperator};
use crate::error::{Error, Result};
use crate::fused::FusedLassoFit;
use crate::signal::{ExtendedDistance, Signal};

pub use crate::trend::{DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Largest graph accepted by [`graph_min_spacing_bruteforce`].
pub const BRUTEFORCE_MAX_NODES: usize = 20;

fn normalize(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr")]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct GraphRepr {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n_nodes, r.edges)
    }
}

impl Graph {
    /// Validates node ids and rejects self-loops and duplicate edges.
    /// Edge order is preserved.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid_input("graph must have at least one node"));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut norm = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i == 0 || j == 0 || i > n_nodes || j > n_nodes {
                return Err(Error::invalid_input(format!(
                    "edge {} = ({i}, {j}) has a node id outside 1..={n_nodes}",
                    k + 1
                )));
            }
            if i == j {
                return Err(Error::invalid_input(format!("self-loop at node {i}")));
            }
            let e = normalize(i, j);
            if !seen.insert(e) {
                return Err(Error::invalid_input(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
            adjacency[i - 1].push(j - 1);
            adjacency[j - 1].push(i - 1);
            norm.push(e);
        }
        Ok(Graph {
            n_nodes,
            edges: norm,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (i, j) = normalize(i, j);
        i >= 1 && j <= self.n_nodes && self.adjacency[i - 1].contains(&(j - 1))
    }

    /// Neighbours of 1-based node `i`, as 1-based ids.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i - 1].iter().map(|&k| k + 1)
    }

    fn incidence(&self) -> SparseOperator {
        let rows = self
            .edges
            .iter()
            .map(|&(i, j)| vec![(i - 1, 1.0), (j - 1, -1.0)])
            .collect();
        SparseOperator::new(self.n_nodes, rows)
    }

    /// Hop distances (0-based indexing) from the given 1-based sources.
    fn bfs(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_nodes];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s - 1].is_none() {
                dist[s - 1] = Some(0);
                queue.push_back(s - 1);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Four-neighbour lattice with nodes numbered row-major from 1.
pub fn grid2d(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid_input("grid dimensions must be at least 1"));
    }
    let id = |r: usize, c: usize| r * cols + c + 1;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Parses one whitespace-separated `i j` pair per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_edge_list(text: &str, n_nodes: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                Error::invalid_input(format!(
                    "line {}: expected \"i j\", got {line:?}",
                    lineno + 1
                ))
            })
        };
        let i = parse(parts.next())?;
        let j = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::invalid_input(format!(
                "line {}: expected two node ids, got {line:?}",
                lineno + 1
            )));
        }
        edges.push((i, j));
    }
    Graph::new(n_nodes, edges)
}

/// A set of graph edges, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct EdgeSet(Vec<(usize, usize)>);

impl<'de> Deserialize<'de> for EdgeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<(usize, usize)>::deserialize(d)?;
        EdgeSet::from_pairs(raw).map_err(serde::de::Error::custom)
    }
}

impl EdgeSet {
    pub fn empty() -> Self {
        EdgeSet(Vec::new())
    }

    fn from_pairs(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut v: Vec<_> = pairs.into_iter().map(|(i, j)| normalize(i, j)).collect();
        v.sort_unstable();
        v.dedup();
        Ok(EdgeSet(v))
    }

    /// Builds a set and checks that every pair is an edge of `g`.
    pub fn new(pairs: Vec<(usize, usize)>, g: &Graph) -> Result<Self> {
        let set = EdgeSet::from_pairs(pairs)?;
        set.check_in(g)?;
        Ok(set)
    }

    pub fn check_in(&self, g: &Graph) -> Result<()> {
        match self.0.iter().find(|&&(i, j)| !g.has_edge(i, j)) {
            Some(&(i, j)) => Err(Error::invalid_input(format!(
                "({i}, {j}) is not an edge of the graph"
            ))),
            None => Ok(()),
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.0.binary_search(&normalize(i, j)).is_ok()
    }
}

pub fn graph_objective(y: &[f64], theta: &[f64], g: &Graph, lambda: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(theta)
        .map(|(a, b)| 0.5 * (a - b) * (a - b))
        .sum();
    fit + lambda * graph_tv(theta, g)
}

pub fn graph_tv(x: &[f64], g: &Graph) -> f64 {
    g.edges
        .iter()
        .map(|&(i, j)| (x[i - 1] - x[j - 1]).abs())
        .sum()
}

/// Graph fused lasso `min ½‖y - θ‖² + λ Σ_{(i,j)∈E} |θ_i - θ_j|`.
///
/// The linear solves are banded in the node numbering, so cost grows with the
/// largest `|i - j|` over edges (the number of columns for a row-major grid).
pub fn graph_fused_lasso(
    y: &Signal,
    g: &Graph,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FusedLassoFit> {
    if y.len() != g.n_nodes {
        return Err(Error::invalid_input(format!(
            "signal has {} values but the graph has {} nodes",
            y.len(),
            g.n_nodes
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid_input(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid_input(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let out = admm::solve(&g.incidence(), y, lambda, AdmmSettings::new(tol, max_iter))?;
    let objective = graph_objective(y, &out, g, lambda);
    Ok(FusedLassoFit {
        theta_hat: Signal::from_vec_unchecked(out),
        lambda,
        objective,
    })
}

/// Edges whose endpoint values differ by more than `tol`.
pub fn graph_changepoints(theta: &[f64], g: &Graph, tol: f64) -> EdgeSet {
    let mut v: Vec<_> = g
        .edges
        .iter()
        .copied()
        .filter(|&(i, j)| (theta[i - 1] - theta[j - 1]).abs() > tol)
        .collect();
    v.sort_unstable();
    EdgeSet(v)
}

/// `d_G(A|B)`: for each edge of `B`, the shortest path length from either of
/// its endpoints to either endpoint of the nearest edge of `A`; the maximum
/// over `B`. Empty `B` gives 0, and an empty `A` (or an unreachable edge)
/// gives `Infinite`.
pub fn graph_screening_distance(a: &EdgeSet, b: &EdgeSet, g: &Graph) -> ExtendedDistance {
    b.0.par_iter()
        .map(|&(i, j)| {
            let dist = g.bfs(&[i, j]);
            a.0.iter()
                .filter_map(|&(p, q)| match (dist[p - 1], dist[q - 1]) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                })
                .min()
                .map_or(ExtendedDistance::Infinite, ExtendedDistance::Finite)
        })
        .reduce(|| ExtendedDistance::Finite(0), ExtendedDistance::max)
}

pub fn graph_hausdorff(a: &EdgeSet, b: &EdgeSet, g: &Graph) -> ExtendedDistance {
    graph_screening_distance(a, b, g).max(graph_screening_distance(b, a, g))
}

/// Smallest jump `|θ₀_i - θ₀_j|` across boundary edges; `+∞` without any.
pub fn graph_min_gap(theta0: &[f64], g: &Graph) -> f64 {
    g.edges
        .iter()
        .map(|&(i, j)| (theta0[i - 1] - theta0[j - 1]).abs())
        .filter(|&d| d != 0.0)
        .fold(f64::INFINITY, f64::min)
}

fn longest_path_in_cluster(
    g: &Graph,
    theta0: &[f64],
    node: usize,
    visited: &mut Vec<bool>,
) -> usize {
    visited[node] = true;
    let level = theta0[node];
    let mut best = 0;
    for &v in &g.adjacency[node] {
        if !visited[v] && theta0[v] == level {
            best = best.max(1 + longest_path_in_cluster(g, theta0, v, visited));
        }
    }
    visited[node] = false;
    best
}

/// Half-width `W_n` of the shortest symmetric path around a boundary edge,
/// by exhaustive search over simple paths that stay inside the constant
/// clusters on either side. For each boundary edge `(i, j)` this is
/// `min(L_i, L_j)` with `L_i` the longest simple path from `i` within its
/// cluster. Without boundary edges the node count is returned.
///
/// On a chain this is one less than the 1-D minimum spacing, because the
/// edge `(t, t+1)` itself uses one node of each segment.
pub fn graph_min_spacing_bruteforce(theta0: &[f64], g: &Graph) -> Result<usize> {
    if g.n_nodes > BRUTEFORCE_MAX_NODES {
        return Err(Error::invalid_input(format!(
            "exhaustive path search is limited to {BRUTEFORCE_MAX_NODES} nodes, got {}",
            g.n_nodes
        )));
    }
    if theta0.len() != g.n_nodes {
        return Err(Error::invalid_input(
            "theta0 length does not match the graph",
        ));
    }
    let mut visited = vec![false; g.n_nodes];
    let mut best = g.n_nodes;
    for &(i, j) in &g.edges {
        if theta0[i - 1] == theta0[j - 1] {
            continue;
        }
        let li = longest_path_in_cluster(g, theta0, i - 1, &mut visited);
        let lj = longest_path_in_cluster(g, theta0, j - 1, &mut visited);
        best = best.min(li.min(lj));
    }
    Ok(best)
}
