//! Undirected binary graphs, missingness masks and partially observed graphs.
//!
//! A [`Graph`] stores one bitset row per vertex, so `has_edge` is a single
//! bit test and shared-partner counts reduce to popcounts over row words.
//! Dyads `{i, j}` with `i < j` are enumerated row-major; every dyad-indexed
//! vector in the crate uses that order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of unordered pairs on `n` vertices.
pub const fn dyad_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Row-major index of dyad `{i, j}` (`i != j`).
pub fn dyad_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All dyads `(i, j)`, `i < j`, in canonical order.
pub fn dyads(n: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    degrees: Vec<u32>,
    edges: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph { n, words, rows: vec![0; n * words], degrees: vec![0; n], edges: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for (i, j) in dyads(n) {
            g.set(i, j, true);
        }
        g
    }

    /// Builds a graph from an edge list; duplicate edges collapse.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, found: i.max(j) + 1 });
            }
            if i == j {
                return Err(Error::Degenerate(alloc::format!("self-loop on vertex {i}")));
            }
            g.set(i, j, true);
        }
        Ok(g)
    }

    /// Builds a graph from a dyad-indexed 0/1 vector in canonical order.
    pub fn from_dyad_states(n: usize, states: &[bool]) -> Result<Self> {
        if states.len() != dyad_count(n) {
            return Err(Error::InvalidParameter(alloc::format!("{} dyad states for n = {n}", states.len())));
        }
        let mut g = Graph::empty(n);
        for ((i, j), &s) in dyads(n).zip(states) {
            if s {
                g.set(i, j, true);
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dyad_count(&self) -> usize {
        dyad_count(self.n)
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i] as usize
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Sets dyad `{i, j}`; returns whether the state changed.
    pub fn set(&mut self, i: usize, j: usize, present: bool) -> bool {
        debug_assert!(i != j && i < self.n && j < self.n);
        if self.has_edge(i, j) == present {
            return false;
        }
        self.rows[i * self.words + j / 64] ^= 1 << (j % 64);
        self.rows[j * self.words + i / 64] ^= 1 << (i % 64);
        if present {
            self.degrees[i] += 1;
            self.degrees[j] += 1;
            self.edges += 1;
        } else {
            self.degrees[i] -= 1;
            self.degrees[j] -= 1;
            self.edges -= 1;
        }
        true
    }

    pub fn toggle(&mut self, i: usize, j: usize) {
        let present = self.has_edge(i, j);
        self.set(i, j, !present);
    }

    pub(crate) fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.row(i))
    }

    /// Number of vertices adjacent to both `i` and `j`.
    #[inline]
    pub fn shared_partners(&self, i: usize, j: usize) -> usize {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn common_neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = (self.row(i), self.row(j));
        a.iter().zip(b).enumerate().flat_map(|(w, (x, y))| word_bits(w, x & y))
    }

    /// Edges `(i, j)` with `i < j` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
    }

    /// Dyad states in canonical order.
    pub fn dyad_states(&self) -> Vec<bool> {
        dyads(self.n).map(|(i, j)| self.has_edge(i, j)).collect()
    }

    /// Vertex-relabelled copy: vertex `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Graph::empty(self.n);
        for (i, j) in self.edges() {
            g.set(perm[i], perm[j], true);
        }
        g
    }

    fn check_same_size(&self, other: &Graph) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }
}

fn word_bits(w: usize, mut word: u64) -> impl Iterator<Item = usize> {
    core::iter::from_fn(move || {
        if word == 0 {
            return None;
        }
        let b = word.trailing_zeros() as usize;
        word &= word - 1;
        Some(w * 64 + b)
    })
}

fn bits(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &x)| word_bits(w, x))
}

/// Missingness indicator `D`: dyad `{i, j}` is present when `x_ij` is unobserved.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MissMask(Graph);

impl MissMask {
    pub fn none(n: usize) -> Self {
        MissMask(Graph::empty(n))
    }

    pub fn all(n: usize) -> Self {
        MissMask(Graph::complete(n))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.0.has_edge(i, j)
    }

    pub fn missing_count(&self) -> usize {
        self.0.edge_count()
    }

    pub fn missing_fraction(&self) -> f64 {
        let total = self.0.dyad_count();
        if total == 0 {
            0.0
        } else {
            self.missing_count() as f64 / total as f64
        }
    }

    pub fn as_graph(&self) -> &Graph {
        &self.0
    }

    pub fn into_graph(self) -> Graph {
        self.0
    }
}

impl From<Graph> for MissMask {
    fn from(g: Graph) -> Self {
        MissMask(g)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum DyadState {
    Absent,
    Present,
    Missing,
}

/// Observed network `X*`: every dyad is absent, present or missing (NA).
///
/// Stored as the observed graph (NA dyads held at 0) plus the mask, which
/// is exactly the `(X_obs, D)` decomposition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartialGraph {
    observed: Graph,
    mask: MissMask,
}

impl PartialGraph {
    pub fn fully_observed(x: Graph) -> Self {
        let n = x.n();
        PartialGraph { observed: x, mask: MissMask::none(n) }
    }

    pub fn from_states<I>(n: usize, states: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), DyadState)>,
    {
        let mut observed = Graph::empty(n);
        let mut mask = Graph::empty(n);
        for ((i, j), s) in states {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(alloc::format!("bad dyad ({i}, {j})")));
            }
            observed.set(i, j, s == DyadState::Present);
            mask.set(i, j, s == DyadState::Missing);
        }
        Ok(PartialGraph { observed, mask: MissMask(mask) })
    }

    pub fn n(&self) -> usize {
        self.observed.n()
    }

    pub fn state(&self, i: usize, j: usize) -> DyadState {
        if self.mask.is_missing(i, j) {
            DyadState::Missing
        } else if self.observed.has_edge(i, j) {
            DyadState::Present
        } else {
            DyadState::Absent
        }
    }

    pub fn mask(&self) -> &MissMask {
        &self.mask
    }

    /// Observed graph with every NA dyad held at 0.
    pub fn observed(&self) -> &Graph {
        &self.observed
    }

    pub fn missing_count(&self) -> usize {
        self.mask.missing_count()
    }

    pub fn observed_dyad_count(&self) -> usize {
        self.observed.dyad_count() - self.missing_count()
    }

    pub fn observed_edge_count(&self) -> usize {
        self.observed.edge_count()
    }

    /// Missing dyads in canonical order.
    pub fn missing_dyads(&self) -> Vec<(usize, usize)> {
        self.mask.as_graph().edges().collect()
    }

    /// The graph `x` agrees with every observed dyad.
    pub fn is_completion(&self, x: &Graph) -> bool {
        x.n() == self.n()
            && dyads(self.n())
                .all(|(i, j)| self.mask.is_missing(i, j) || x.has_edge(i, j) == self.observed.has_edge(i, j))
    }

    pub fn into_parts(self) -> (Graph, MissMask) {
        (self.observed, self.mask)
    }
}

/// Masks `x` with `d`: `x*_ij = NA` where `d_ij = 1`, else `x_ij`.
pub fn apply_mask(x: &Graph, d: &MissMask) -> Result<PartialGraph> {
    x.check_same_size(d.as_graph())?;
    let mut observed = x.clone();
    for (i, j) in d.as_graph().edges() {
        observed.set(i, j, false);
    }
    Ok(PartialGraph { observed, mask: d.clone() })
}

/// Replaces every NA dyad with 0.
pub fn zero_impute(p: &PartialGraph) -> Graph {
    p.observed.clone()
}

pub fn degree_sequence(g: &Graph) -> Vec<usize> {
    g.degrees().iter().map(|&d| d as usize).collect()
}

pub fn density(g: &Graph) -> Result<f64> {
    if g.n() < 2 {
        return Err(Error::Degenerate(alloc::format!("density needs n >= 2, got {}", g.n())));
    }
    Ok(g.edge_count() as f64 / g.dyad_count() as f64)
}

/// Freeman degree centralisation: `sum_i (max_deg - deg_i) / ((n-1)(n-2))`.
pub fn degree_centralisation(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n < 3 {
        return Err(Error::Degenerate(alloc::format!("centralisation needs n >= 3, got {n}")));
    }
    let max = g.degrees().iter().copied().max().unwrap_or(0) as u64;
    let spread: u64 = g.degrees().iter().map(|&d| max - d as u64).sum();
    Ok(spread as f64 / ((n - 1) * (n - 2)) as f64)
}

/// Per-node covariates. Every column holds exactly `n` entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeData {
    n: usize,
    numeric: BTreeMap<String, Vec<f64>>,
    categorical: BTreeMap<String, Vec<String>>,
}

impl NodeData {
    pub fn new(n: usize) -> Self {
        NodeData { n, ..Default::default() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_numeric(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::AttributeLength { name, expected: self.n, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("non-finite value in `{name}`")));
        }
        self.numeric.insert(name, values);
        Ok(())
    }

    pub fn add_categorical(&mut self, name: impl Into<String>, values: Vec<String>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::AttributeLength { name, expected: self.n, found: values.len() });
        }
        self.categorical.insert(name, values);
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.numeric.get(name).map(Vec::as_slice)
    }

    pub fn categorical(&self, name: &str) -> Option<&[String]> {
        self.categorical.get(name).map(Vec::as_slice)
    }

    pub fn numeric_columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.numeric.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn categorical_columns(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.categorical.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}
