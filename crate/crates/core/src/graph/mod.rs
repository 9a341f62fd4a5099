//! Static and temporal network data model.
//!
//! Node ids are dense and 0-based. Edges are undirected and stored once with
//! `j < k`; the solver keeps its own directional copies.

mod io;
mod knn;
mod synthetic;

pub use io::{
    load_graph, load_points_csv, load_temporal_graph, save_graph, save_temporal_graph, PointsTable,
};
pub use knn::{knn_graph, knn_indices, Weighting};
pub use synthetic::{
    gen_synthetic, rewire_inter_community, sample_pairs, InterRewire, SyntheticNetwork, SyntheticParams,
};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid edge ({j}, {k}): {reason}")]
    InvalidEdge { j: usize, k: usize, reason: &'static str },
    #[error("invalid temporal link (node {node}, snapshot {t}): {reason}")]
    InvalidLink { node: usize, t: usize, reason: &'static str },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed graph file {path}: {msg}")]
    Format { path: String, msg: String },
}

/// Observations held by one node: feature rows `w` and targets `y`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodePayload {
    #[serde(rename = "W")]
    pub features: Vec<Vec<f64>>,
    #[serde(rename = "y")]
    pub targets: Vec<f64>,
}

impl NodePayload {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        Self { features, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Feature dimension, if any observation exists.
    pub fn dim(&self) -> Option<usize> {
        self.features.first().map(|w| w.len())
    }

    pub fn observations(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.iter().map(|w| w.as_slice()).zip(self.targets.iter().copied())
    }

    pub fn push(&mut self, w: Vec<f64>, y: f64) {
        self.features.push(w);
        self.targets.push(y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    payloads: Vec<NodePayload>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn payloads(&self) -> &[NodePayload] {
        &self.payloads
    }

    pub fn payload(&self, node: usize) -> &NodePayload {
        &self.payloads[node]
    }

    /// For every node, the incident edges as `(edge index, neighbour)`.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for (e, edge) in self.edges.iter().enumerate() {
            inc[edge.j].push((e, edge.k));
            inc[edge.k].push((e, edge.j));
        }
        inc
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for e in &self.edges {
            deg[e.j] += 1;
            deg[e.k] += 1;
        }
        deg
    }

    /// Observation dimension shared by all payloads (`None` without data).
    pub fn observation_dim(&self) -> Option<usize> {
        self.payloads.iter().find_map(|p| p.dim())
    }

    /// Same graph with different per-node payloads.
    pub fn with_payloads(&self, payloads: Vec<NodePayload>) -> Result<Graph, GraphError> {
        let edges: Vec<(usize, usize, f64)> = self.edges.iter().map(|e| (e.j, e.k, e.weight)).collect();
        build_graph(self.node_count, &edges, Some(payloads))
    }

    /// A node is present when it has observations or at least one edge.
    pub fn present_nodes(&self) -> Vec<bool> {
        let deg = self.degrees();
        (0..self.node_count)
            .map(|j| deg[j] > 0 || !self.payloads[j].is_empty())
            .collect()
    }
}

/// Validates and canonicalizes an edge list into a [`Graph`].
pub fn build_graph(
    node_count: usize,
    edges: &[(usize, usize, f64)],
    payloads: Option<Vec<NodePayload>>,
) -> Result<Graph, GraphError> {
    if node_count == 0 {
        return Err(GraphError::InvalidParameter("node_count must be positive".into()));
    }
    let mut seen = HashSet::with_capacity(edges.len());
    let mut out = Vec::with_capacity(edges.len());
    for &(a, b, w) in edges {
        let invalid = |reason| GraphError::InvalidEdge { j: a, k: b, reason };
        if a >= node_count || b >= node_count {
            return Err(invalid("node id out of range"));
        }
        if a == b {
            return Err(invalid("self-loop"));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(invalid("weight must be finite and nonnegative"));
        }
        let (j, k) = if a < b { (a, b) } else { (b, a) };
        if !seen.insert((j, k)) {
            return Err(invalid("duplicate undirected edge"));
        }
        out.push(Edge { j, k, weight: w });
    }

    let payloads = match payloads {
        Some(p) => {
            if p.len() != node_count {
                return Err(GraphError::DimensionMismatch(format!(
                    "{} payloads for {node_count} nodes",
                    p.len()
                )));
            }
            p
        }
        None => vec![NodePayload::default(); node_count],
    };
    let mut dim = None;
    for (node, p) in payloads.iter().enumerate() {
        if p.features.len() != p.targets.len() {
            return Err(GraphError::DimensionMismatch(format!(
                "node {node}: {} feature rows but {} targets",
                p.features.len(),
                p.targets.len()
            )));
        }
        for w in &p.features {
            match dim {
                None => dim = Some(w.len()),
                Some(d) if d != w.len() => {
                    return Err(GraphError::DimensionMismatch(format!(
                        "node {node}: observation of dimension {} (expected {d})",
                        w.len()
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(Graph { node_count, edges: out, payloads })
}

/// Link between node `node` in snapshot `t` and the same node in `t + 1`
/// (0-based snapshot indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalLink {
    pub node: usize,
    pub t: usize,
    pub weight: f64,
}

/// Sequence of aligned snapshots (same node id space) plus temporal links.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraph {
    snapshots: Vec<Graph>,
    links: Vec<TemporalLink>,
}

impl TemporalGraph {
    pub fn new(snapshots: Vec<Graph>, links: Vec<TemporalLink>) -> Result<Self, GraphError> {
        let Some(first) = snapshots.first() else {
            return Err(GraphError::InvalidParameter("need at least one snapshot".into()));
        };
        let n = first.node_count();
        if snapshots.iter().any(|s| s.node_count() != n) {
            return Err(GraphError::InvalidParameter(
                "snapshots must share one node id space".into(),
            ));
        }
        let m = snapshots.len();
        let mut seen = HashSet::new();
        for l in &links {
            let invalid = |reason| GraphError::InvalidLink { node: l.node, t: l.t, reason };
            if l.node >= n {
                return Err(invalid("node id out of range"));
            }
            if l.t + 1 >= m {
                return Err(invalid("link must join snapshots t and t+1 within the sequence"));
            }
            if !l.weight.is_finite() || l.weight < 0.0 {
                return Err(invalid("weight must be finite and nonnegative"));
            }
            if !seen.insert((l.node, l.t)) {
                return Err(invalid("duplicate temporal link"));
            }
        }
        Ok(Self { snapshots, links })
    }

    /// Links every node present in both of two consecutive snapshots.
    pub fn with_full_links(snapshots: Vec<Graph>, weight: f64) -> Result<Self, GraphError> {
        let present: Vec<Vec<bool>> = snapshots.iter().map(|s| s.present_nodes()).collect();
        let mut links = Vec::new();
        for t in 0..snapshots.len().saturating_sub(1) {
            for node in 0..snapshots[t].node_count() {
                if present[t][node] && present[t + 1].get(node).copied().unwrap_or(false) {
                    links.push(TemporalLink { node, t, weight });
                }
            }
        }
        Self::new(snapshots, links)
    }

    pub fn snapshots(&self) -> &[Graph] {
        &self.snapshots
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    pub fn node_count(&self) -> usize {
        self.snapshots[0].node_count()
    }

    pub fn links(&self) -> &[TemporalLink] {
        &self.links
    }

    /// Sub-sequence of snapshots `start..end` with the links inside it.
    pub fn window(&self, start: usize, end: usize) -> Result<TemporalGraph, GraphError> {
        if start >= end || end > self.snapshots.len() {
            return Err(GraphError::InvalidParameter(format!(
                "bad window {start}..{end} of {} snapshots",
                self.snapshots.len()
            )));
        }
        let links = self
            .links
            .iter()
            .filter(|l| l.t >= start && l.t + 1 < end)
            .map(|l| TemporalLink { t: l.t - start, ..*l })
            .collect();
        TemporalGraph::new(self.snapshots[start..end].to_vec(), links)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_graph() {
        let g = build_graph(2, &[(0, 1, 1.0)], None).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0], Edge { j: 0, k: 1, weight: 1.0 });
    }

    #[test]
    fn edges_are_canonicalized() {
        let g = build_graph(3, &[(2, 0, 0.5)], None).unwrap();
        assert_eq!((g.edges()[0].j, g.edges()[0].k), (0, 2));
    }

    #[test]
    fn rejects_invalid_edges() {
        let bad: [&[(usize, usize, f64)]; 5] = [
            &[(0, 0, 1.0)],
            &[(0, 1, 1.0), (1, 0, 2.0)],
            &[(0, 3, 1.0)],
            &[(0, 1, -1.0)],
            &[(0, 1, f64::NAN)],
        ];
        for edges in bad {
            assert!(matches!(build_graph(3, edges, None), Err(GraphError::InvalidEdge { .. })));
        }
    }

    #[test]
    fn rejects_ragged_payloads() {
        let p = vec![
            NodePayload::new(vec![vec![1.0, 2.0]], vec![1.0]),
            NodePayload::new(vec![vec![1.0]], vec![1.0]),
        ];
        assert!(matches!(build_graph(2, &[], Some(p)), Err(GraphError::DimensionMismatch(_))));
    }

    #[test]
    fn temporal_links_must_be_consecutive() {
        let g = build_graph(2, &[(0, 1, 1.0)], None).unwrap();
        let ok = TemporalGraph::new(vec![g.clone(), g.clone()], vec![TemporalLink { node: 0, t: 0, weight: 1.0 }]);
        assert!(ok.is_ok());
        let bad = TemporalGraph::new(vec![g.clone(), g.clone()], vec![TemporalLink { node: 0, t: 1, weight: 1.0 }]);
        assert!(matches!(bad, Err(GraphError::InvalidLink { .. })));
        let tg = TemporalGraph::with_full_links(vec![g.clone(), g.clone(), g], 1.0).unwrap();
        assert_eq!(tg.links().len(), 4);
        let w = tg.window(1, 3).unwrap();
        assert_eq!(w.snapshot_count(), 2);
        assert_eq!(w.links().len(), 2);
        assert!(w.links().iter().all(|l| l.t == 0));
    }
}
