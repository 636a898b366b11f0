//! Immutable weighted graph and category bookkeeping.
//!
//! Conventions used throughout the crate:
//!
//! * a self-loop `{v, v}` is stored once in `v`'s adjacency list, contributes
//!   2 to `deg(v)` and twice its weight to the node weight `w(v)`;
//! * a graph built without explicit weights has all edge weights equal to 1;
//! * node ids are remapped to dense `0..N` at build time (first-appearance
//!   order); the original ids are retained for I/O.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Reserved label for nodes missing from a category file; maps to the
/// irrelevant category when one is requested.
pub const OTHER_LABEL: &str = "__other__";

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<u32>,
    node_weights: Vec<f64>,
    edge_count: usize,
    external_ids: Vec<u64>,
}

impl WeightedGraph {
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Number of edges; a self-loop counts once.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of incident edge endpoints; a self-loop contributes 2.
    pub fn degree(&self, v: u32) -> u32 {
        self.degrees[v as usize]
    }

    /// Adjacency entries of `v`: `(neighbor, edge weight)`, self-loop listed once.
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let r = self.offsets[v as usize]..self.offsets[v as usize + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// Total incident weight `w(v)`, with a self-loop counted twice.
    pub fn node_weight(&self, v: u64) -> Result<f64> {
        let n = self.node_weights.len() as u64;
        if v >= n {
            return Err(Error::UnknownNode(v));
        }
        Ok(self.node_weights[v as usize])
    }

    /// Unchecked variant of [`node_weight`](Self::node_weight) for hot loops.
    pub fn node_weight_dense(&self, v: u32) -> f64 {
        self.node_weights[v as usize]
    }

    /// Original (pre-remap) id of dense node `v`.
    pub fn external_id(&self, v: u32) -> u64 {
        self.external_ids[v as usize]
    }

    pub fn has_self_loop(&self, v: u32) -> bool {
        self.neighbors(v).any(|(u, _)| u == v)
    }

    /// Sum of all node weights, equal to twice the total edge weight.
    pub fn total_weight(&self) -> f64 {
        self.node_weights.iter().sum()
    }

    /// Sum of all degrees, equal to `2 |E|`.
    pub fn total_volume(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    /// Copy of the graph with every edge weight replaced by `f(u, v, w)`.
    ///
    /// `f` must be symmetric in `(u, v)`; both orientations of an edge are
    /// passed with `u <= v` so category-based reweighting is safe.
    pub fn reweighted(&self, mut f: impl FnMut(u32, u32, f64) -> f64) -> WeightedGraph {
        let mut g = self.clone();
        for v in 0..self.node_count() as u32 {
            for i in self.offsets[v as usize]..self.offsets[v as usize + 1] {
                let u = g.neighbors[i];
                let (a, b) = if v <= u { (v, u) } else { (u, v) };
                g.weights[i] = f(a, b, self.weights[i]);
            }
        }
        for v in 0..g.node_count() {
            let mut w = 0.0;
            for i in g.offsets[v]..g.offsets[v + 1] {
                let mult = if g.neighbors[i] as usize == v { 2.0 } else { 1.0 };
                w += mult * g.weights[i];
            }
            g.node_weights[v] = w;
        }
        g
    }

    /// Edges as `(u, v, w)` with `u <= v`, each undirected edge once.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.node_count() as u32)
            .flat_map(move |v| self.neighbors(v).map(move |(u, w)| (v, u, w)))
            .filter(|&(v, u, _)| v <= u)
    }

    /// True when every node is reachable from node 0 through positive-weight edges.
    pub fn positive_weight_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(v) = stack.pop() {
            for (u, w) in self.neighbors(v) {
                if w > 0.0 && !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == n
    }
}

/// Build a symmetric graph from an undirected edge list.
///
/// Missing weights default to 1. Duplicate undirected edges and negative
/// weights are rejected. Node ids are remapped to dense `0..N`.
pub fn build_graph(edges: &[(u64, u64, Option<f64>)]) -> Result<WeightedGraph> {
    let mut id_map: HashMap<u64, u32> = HashMap::new();
    let mut external_ids: Vec<u64> = Vec::new();
    let mut dense_edges: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
    let mut seen: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();

    let mut intern = |id: u64, external_ids: &mut Vec<u64>| -> u32 {
        *id_map.entry(id).or_insert_with(|| {
            external_ids.push(id);
            (external_ids.len() - 1) as u32
        })
    };

    for &(u, v, w) in edges {
        let w = w.unwrap_or(1.0);
        if w < 0.0 || w.is_nan() {
            return Err(Error::NegativeWeight { u, v, weight: w });
        }
        let du = intern(u, &mut external_ids);
        let dv = intern(v, &mut external_ids);
        let key = (du.min(dv), du.max(dv));
        if !seen.insert(key) {
            return Err(Error::DuplicateEdge(u, v));
        }
        dense_edges.push((du, dv, w));
    }

    let n = external_ids.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    let mut counts = vec![0usize; n];
    for &(u, v, _) in &dense_edges {
        counts[u as usize] += 1;
        if u != v {
            counts[v as usize] += 1;
        }
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + counts[i];
    }
    let mut cursor = offsets.clone();
    let total = offsets[n];
    let mut neighbors = vec![0u32; total];
    let mut weights = vec![0.0f64; total];
    for &(u, v, w) in &dense_edges {
        neighbors[cursor[u as usize]] = v;
        weights[cursor[u as usize]] = w;
        cursor[u as usize] += 1;
        if u != v {
            neighbors[cursor[v as usize]] = u;
            weights[cursor[v as usize]] = w;
            cursor[v as usize] += 1;
        }
    }

    let mut degrees = vec![0u32; n];
    let mut node_weights = vec![0.0f64; n];
    for v in 0..n {
        let mut deg = 0u32;
        let mut nw = 0.0;
        for i in offsets[v]..offsets[v + 1] {
            let mult = if neighbors[i] as usize == v { 2 } else { 1 };
            deg += mult;
            nw += mult as f64 * weights[i];
        }
        degrees[v] = deg;
        node_weights[v] = nw;
    }

    Ok(WeightedGraph {
        offsets,
        neighbors,
        weights,
        degrees,
        node_weights,
        edge_count: dense_edges.len(),
        external_ids,
    })
}

/// Partition of the nodes into labeled categories, with at most one category
/// flagged irrelevant.
#[derive(Debug, Clone)]
pub struct CategoryPartition {
    category_of: Vec<u32>,
    labels: Vec<String>,
    irrelevant: Option<u32>,
}

impl CategoryPartition {
    pub fn new(category_of: Vec<u32>, labels: Vec<String>, irrelevant: Option<u32>) -> Result<Self> {
        let k = labels.len() as u32;
        if k == 0 {
            return Err(Error::InvalidParameter("no categories".into()));
        }
        if let Some(c) = irrelevant {
            if c >= k {
                return Err(Error::InvalidParameter("irrelevant category out of range".into()));
            }
        }
        if let Some(&c) = category_of.iter().find(|&&c| c >= k) {
            return Err(Error::UnknownCategory(c.to_string()));
        }
        Ok(CategoryPartition { category_of, labels, irrelevant })
    }

    /// Trivial partition: every node in one category.
    pub fn single(node_count: usize) -> Self {
        CategoryPartition {
            category_of: vec![0; node_count],
            labels: vec!["all".into()],
            irrelevant: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.category_of.len()
    }

    pub fn category_count(&self) -> usize {
        self.labels.len()
    }

    pub fn category_of(&self, v: u32) -> u32 {
        self.category_of[v as usize]
    }

    pub fn label(&self, c: u32) -> &str {
        &self.labels[c as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn irrelevant(&self) -> Option<u32> {
        self.irrelevant
    }

    pub fn is_irrelevant(&self, c: u32) -> bool {
        self.irrelevant == Some(c)
    }

    pub fn category_by_label(&self, label: &str) -> Result<u32> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
            .ok_or_else(|| Error::UnknownCategory(label.to_string()))
    }

    pub fn size(&self, c: u32) -> usize {
        self.category_of.iter().filter(|&&x| x == c).count()
    }

    pub fn members(&self, c: u32) -> impl Iterator<Item = u32> + '_ {
        self.category_of
            .iter()
            .enumerate()
            .filter(move |&(_, &x)| x == c)
            .map(|(v, _)| v as u32)
    }
}

/// Exact size/volume/weight statistics of one category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSetStats {
    pub size: usize,
    pub volume: u64,
    pub weight: f64,
    pub size_fraction: f64,
    pub volume_fraction: f64,
}

pub fn set_stats(g: &WeightedGraph, p: &CategoryPartition, c: u32) -> Result<NodeSetStats> {
    if c as usize >= p.category_count() {
        return Err(Error::UnknownCategory(c.to_string()));
    }
    if p.node_count() != g.node_count() {
        return Err(Error::InvalidParameter("partition does not cover the graph".into()));
    }
    let mut size = 0usize;
    let mut volume = 0u64;
    let mut weight = 0.0;
    for v in 0..g.node_count() as u32 {
        if p.category_of(v) == c {
            size += 1;
            volume += g.degree(v) as u64;
            weight += g.node_weight_dense(v);
        }
    }
    Ok(NodeSetStats {
        size,
        volume,
        weight,
        size_fraction: size as f64 / g.node_count() as f64,
        volume_fraction: volume as f64 / g.total_volume() as f64,
    })
}

/// Edge counts `|E_{C_i, C_j}|` keyed by unordered category pair `(min, max)`.
///
/// Pairs with no edge are absent; the nonzero entries define the category
/// graph over the partition.
pub fn category_edge_sets(
    g: &WeightedGraph,
    p: &CategoryPartition,
) -> HashMap<(u32, u32), usize> {
    let mut counts = HashMap::new();
    for (u, v, _) in g.edges() {
        let (a, b) = {
            let (cu, cv) = (p.category_of(u), p.category_of(v));
            (cu.min(cv), cu.max(cv))
        };
        *counts.entry((a, b)).or_insert(0) += 1;
    }
    counts
}
