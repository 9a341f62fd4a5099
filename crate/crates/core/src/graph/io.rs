//! File formats.
//!
//! Graph file (JSON):
//! `{"nodes": N, "edges": [[j, k, w], ...], "payloads": {"<id>": {"W": [[...]], "y": [...]}}}`
//!
//! Temporal graph: a directory with `snapshot_0001.json`, `snapshot_0002.json`, …
//! and `temporal_links.json` holding `[[j, t, t+1, w], ...]` with 1-based
//! snapshot numbers matching the file names.

use super::{build_graph, Graph, GraphError, NodePayload, TemporalGraph, TemporalLink};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    payloads: BTreeMap<String, NodePayload>,
}

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, msg: impl ToString) -> GraphError {
    GraphError::Format { path: path.display().to_string(), msg: msg.to_string() }
}

pub(crate) fn graph_to_json(graph: &Graph) -> serde_json::Value {
    let file = GraphFile {
        nodes: graph.node_count(),
        edges: graph.edges().iter().map(|e| (e.j, e.k, e.weight)).collect(),
        payloads: graph
            .payloads()
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_empty())
            .map(|(i, p)| (i.to_string(), p.clone()))
            .collect(),
    };
    serde_json::to_value(file).expect("graph serializes")
}

fn graph_from_str(text: &str, path: &Path) -> Result<Graph, GraphError> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| format_err(path, e))?;
    let mut payloads = vec![NodePayload::default(); file.nodes];
    for (id, p) in file.payloads {
        let idx: usize = id
            .parse()
            .map_err(|_| format_err(path, format!("payload key {id:?} is not a node id")))?;
        if idx >= file.nodes {
            return Err(format_err(path, format!("payload for node {idx} out of range")));
        }
        payloads[idx] = p;
    }
    build_graph(file.nodes, &file.edges, Some(payloads))
}

pub fn save_graph(graph: &Graph, path: &Path) -> Result<(), GraphError> {
    let text = serde_json::to_string(&graph_to_json(graph)).expect("graph serializes");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn load_graph(path: &Path) -> Result<Graph, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    graph_from_str(&text, path)
}

fn snapshot_name(t: usize) -> String {
    format!("snapshot_{:04}.json", t + 1)
}

pub fn save_temporal_graph(tg: &TemporalGraph, dir: &Path) -> Result<(), GraphError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (t, g) in tg.snapshots().iter().enumerate() {
        save_graph(g, &dir.join(snapshot_name(t)))?;
    }
    let links: Vec<(usize, usize, usize, f64)> =
        tg.links().iter().map(|l| (l.node, l.t + 1, l.t + 2, l.weight)).collect();
    let path = dir.join("temporal_links.json");
    fs::write(&path, serde_json::to_string(&links).expect("links serialize")).map_err(|e| io_err(&path, e))
}

pub fn load_temporal_graph(dir: &Path) -> Result<TemporalGraph, GraphError> {
    let mut snapshots = Vec::new();
    loop {
        let path = dir.join(snapshot_name(snapshots.len()));
        if !path.exists() {
            break;
        }
        snapshots.push(load_graph(&path)?);
    }
    if snapshots.is_empty() {
        return Err(format_err(dir, "no snapshot_0001.json found"));
    }
    let path = dir.join("temporal_links.json");
    let links = if path.exists() {
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let raw: Vec<(usize, usize, usize, f64)> = serde_json::from_str(&text).map_err(|e| format_err(&path, e))?;
        let mut links = Vec::with_capacity(raw.len());
        for (node, t, t_next, weight) in raw {
            if t == 0 || t_next != t + 1 {
                return Err(GraphError::InvalidLink {
                    node,
                    t,
                    reason: "temporal link must join snapshots t and t+1 (1-based)",
                });
            }
            links.push(TemporalLink { node, t: t - 1, weight });
        }
        links
    } else {
        Vec::new()
    };
    TemporalGraph::new(snapshots, links)
}

/// Rows of a points CSV with header `id,x1,x2,...,<features...>,target`.
/// Columns named `x<digits>` are coordinates, `target` is the response and
/// every other column (besides `id`) is a feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PointsTable {
    pub ids: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub feature_names: Vec<String>,
}

pub fn load_points_csv(path: &Path) -> Result<PointsTable, GraphError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let headers = rdr.headers().map_err(|e| format_err(path, e))?.clone();
    let is_coord = |h: &str| h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit());
    let id_col = headers.iter().position(|h| h == "id");
    let target_col = headers
        .iter()
        .position(|h| h == "target")
        .ok_or_else(|| format_err(path, "missing `target` column"))?;
    let coord_cols: Vec<usize> = headers.iter().enumerate().filter(|(_, h)| is_coord(h)).map(|(i, _)| i).collect();
    if coord_cols.is_empty() {
        return Err(format_err(path, "no coordinate columns (x1, x2, ...)"));
    }
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != id_col && *i != target_col && !coord_cols.contains(i))
        .collect();

    let mut table = PointsTable {
        ids: Vec::new(),
        coords: Vec::new(),
        features: Vec::new(),
        targets: Vec::new(),
        feature_names: feature_cols.iter().map(|&i| headers[i].to_string()).collect(),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let num = |i: usize| -> Result<f64, GraphError> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| format_err(path, format!("row {}: column {} is not a number", row + 1, &headers[i])))
        };
        table.ids.push(id_col.and_then(|i| rec.get(i)).map_or_else(|| row.to_string(), str::to_string));
        table.coords.push(coord_cols.iter().map(|&i| num(i)).collect::<Result<_, _>>()?);
        table.features.push(feature_cols.iter().map(|&i| num(i)).collect::<Result<_, _>>()?);
        table.targets.push(num(target_col)?);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_synthetic, SyntheticParams};

    #[test]
    fn graph_round_trip_is_exact() {
        let net = gen_synthetic(&SyntheticParams { seed: 9, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        save_graph(&net.graph, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), net.graph);
    }

    #[test]
    fn temporal_round_trip() {
        let g = build_graph(3, &[(0, 1, 0.25), (1, 2, 3.0)], None).unwrap();
        let tg = TemporalGraph::with_full_links(vec![g.clone(), g], 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_temporal_graph(&tg, dir.path()).unwrap();
        assert!(dir.path().join("snapshot_0002.json").exists());
        assert_eq!(load_temporal_graph(dir.path()).unwrap(), tg);
    }

    #[test]
    fn rejects_bad_payload_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        fs::write(&path, r#"{"nodes": 2, "edges": [[0, 1, 1.0]], "payloads": {"7": {"W": [], "y": []}}}"#).unwrap();
        assert!(matches!(load_graph(&path), Err(GraphError::Format { .. })));
    }

    #[test]
    fn points_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "id,x1,x2,beds,baths,target\na,0.5,1.0,2,1,10.5\nb,1.5,2.0,3,2,12\n").unwrap();
        let t = load_points_csv(&path).unwrap();
        assert_eq!(t.ids, vec!["a", "b"]);
        assert_eq!(t.coords[1], vec![1.5, 2.0]);
        assert_eq!(t.features[0], vec![2.0, 1.0]);
        assert_eq!(t.targets, vec![10.5, 12.0]);
        assert_eq!(t.feature_names, vec!["beds", "baths"]);
    }
}
