//! Compressed adjacency storage for undirected weighted graphs.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    BadWeight(usize, usize, f64),
}

/// Undirected weighted graph in CSR form. Every edge `u != v` is stored in
/// both adjacency lists; self-loops are kept apart in `self_loops` (one entry
/// per node, the summed loop weight counted once).
///
/// Node strength is `Σ_v w(u,v) + 2·self_loop(u)`, so that the strengths sum
/// to twice the total weight.
#[derive(Clone, Debug, Default)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    self_loops: Vec<f64>,
    strengths: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Builds a graph from an undirected edge list. Parallel edges are summed;
    /// `(u, u, w)` adds `w` to the self-loop of `u`.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(GraphError::NodeOutOfRange(u, v, node_count));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight(u, v, w));
            }
        }
        let mut merged: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|&(u, v, w)| (u.min(v), u.max(v), w))
            .collect();
        merged.sort_by_key(|e| (e.0, e.1));
        merged.dedup_by(|next, kept| {
            if (next.0, next.1) == (kept.0, kept.1) {
                kept.2 += next.2;
                true
            } else {
                false
            }
        });
        Ok(Self::from_unique_edges(node_count, merged.into_iter()))
    }

    /// Builds from edges that are already unique (no parallel duplicates).
    pub(crate) fn from_unique_edges(
        node_count: usize,
        edges: impl Iterator<Item = (usize, usize, f64)> + Clone,
    ) -> Self {
        let mut degree = vec![0usize; node_count];
        let mut self_loops = vec![0.0; node_count];
        for (u, v, w) in edges.clone() {
            if u == v {
                self_loops[u] += w;
            } else {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let nnz = *offsets.last().unwrap();
        let mut targets = vec![0u32; nnz];
        let mut weights = vec![0.0; nnz];
        let mut fill = offsets[..node_count].to_vec();
        let mut total_weight = 0.0;
        for (u, v, w) in edges {
            total_weight += w;
            if u == v {
                continue;
            }
            targets[fill[u]] = v as u32;
            weights[fill[u]] = w;
            fill[u] += 1;
            targets[fill[v]] = u as u32;
            weights[fill[v]] = w;
            fill[v] += 1;
        }
        // keep each adjacency list sorted by neighbor id for determinism
        for u in 0..node_count {
            let (s, e) = (offsets[u], offsets[u + 1]);
            let mut pairs: Vec<(u32, f64)> = targets[s..e]
                .iter()
                .copied()
                .zip(weights[s..e].iter().copied())
                .collect();
            if pairs.windows(2).any(|p| p[0].0 > p[1].0) {
                pairs.sort_by_key(|p| p.0);
                for (i, (t, w)) in pairs.into_iter().enumerate() {
                    targets[s + i] = t;
                    weights[s + i] = w;
                }
            }
        }
        let strengths = (0..node_count)
            .map(|u| weights[offsets[u]..offsets[u + 1]].iter().sum::<f64>() + 2.0 * self_loops[u])
            .collect();
        Self {
            offsets,
            targets,
            weights,
            self_loops,
            strengths,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.self_loops.len()
    }

    /// Number of undirected edges between distinct nodes.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Sum of undirected edge weights, self-loops included once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn strength(&self, u: usize) -> f64 {
        self.strengths[u]
    }

    pub fn self_loop(&self, u: usize) -> f64 {
        self.self_loops[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Neighbors of `u` (excluding `u` itself) with edge weights.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&v, &w)| (v as usize, w))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count())
            .flat_map(move |u| self.neighbors(u).map(move |(v, w)| (u, v, w)))
            .filter(|&(u, v, _)| u < v)
    }

    /// Collapses the graph according to `assignment` (dense ids in
    /// `0..groups`). Edges inside a group become that group's self-loop.
    pub fn contract(&self, assignment: &[usize], groups: usize) -> Self {
        use std::collections::HashMap;
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for u in 0..self.node_count() {
            let cu = assignment[u];
            if self.self_loops[u] > 0.0 {
                *acc.entry((cu, cu)).or_insert(0.0) += self.self_loops[u];
            }
            for (v, w) in self.neighbors(u) {
                if u < v {
                    let cv = assignment[v];
                    *acc.entry((cu.min(cv), cu.max(cv))).or_insert(0.0) += w;
                }
            }
        }
        let mut edges: Vec<(usize, usize, f64)> =
            acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        edges.sort_by_key(|e| (e.0, e.1));
        Self::from_unique_edges(groups, edges.into_iter())
    }

    /// Connected components as dense ids by first occurrence.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}
