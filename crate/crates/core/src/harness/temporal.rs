//! Streaming regression on a synthetic sequence of drifting clusters.
//!
//! Nodes sit in spatial clusters; every cluster shares a linear model that
//! drifts slowly between snapshots, and some clusters jump to a new model at
//! one change point. Held-out nodes are predicted from their nearest
//! training nodes.

use super::results::{EvalRecord, Metric};
use super::HarnessError;
use crate::graph::{knn_graph, Graph, NodePayload, TemporalGraph, Weighting};
use crate::linalg::dot;
use crate::objectives::NodeObjective;
use crate::solver::{predict_unseen, PredictStrategy};
use crate::temporal::{run_streaming, STParams, TemporalVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftParams {
    pub communities: usize,
    pub nodes_per_community: usize,
    pub test_nodes_per_community: usize,
    pub dim: usize,
    pub examples_per_node: usize,
    pub test_examples_per_node: usize,
    pub snapshots: usize,
    /// 0-based snapshot at which the changing clusters jump.
    pub change_point: usize,
    pub changed_communities: usize,
    pub jump_scale: f64,
    pub drift_std: f64,
    pub noise_std: f64,
    /// Neighbours per node in the spatial graph and for prediction.
    pub knn: usize,
    pub seed: u64,
}

impl Default for DriftParams {
    fn default() -> Self {
        Self {
            communities: 3,
            nodes_per_community: 20,
            test_nodes_per_community: 5,
            dim: 3,
            examples_per_node: 3,
            test_examples_per_node: 5,
            snapshots: 6,
            change_point: 3,
            changed_communities: 1,
            jump_scale: 2.0,
            drift_std: 0.05,
            noise_std: 0.5,
            knn: 6,
            seed: 0,
        }
    }
}

impl DriftParams {
    /// 1-based snapshots strictly between the first one and the change point.
    pub fn steady_snapshots(&self) -> Vec<usize> {
        (2..=self.change_point).collect()
    }

    /// 1-based snapshots from the change point on.
    pub fn post_change_snapshots(&self) -> Vec<usize> {
        (self.change_point + 1..=self.snapshots).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DriftSequence {
    /// Training nodes only, with their observations as payloads.
    pub tgraph: TemporalGraph,
    pub train_coords: Vec<Vec<f64>>,
    pub test_coords: Vec<Vec<f64>>,
    /// `test_payloads[t][i]` for held-out node `i`.
    pub test_payloads: Vec<Vec<NodePayload>>,
    /// `models[t][c]`: ground truth of cluster `c` at snapshot `t`.
    pub models: Vec<Vec<Vec<f64>>>,
    pub change_point: usize,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn regression_pairs(model: &[f64], count: usize, noise: f64, rng: &mut ChaCha8Rng) -> NodePayload {
    let mut p = NodePayload::default();
    for _ in 0..count {
        let w = gaussian(rng, model.len(), 1.0);
        let y = dot(&w, model) + noise * rng.sample::<f64, _>(StandardNormal);
        p.push(w, y);
    }
    p
}

pub fn gen_drifting_clusters(params: &DriftParams) -> Result<DriftSequence, HarnessError> {
    let p = params;
    if p.communities == 0 || p.nodes_per_community == 0 || p.dim == 0 || p.snapshots == 0 {
        return Err(HarnessError::Invalid("cluster count, size, dimension and snapshot count must be positive".into()));
    }
    if p.change_point >= p.snapshots || p.changed_communities > p.communities {
        return Err(HarnessError::Invalid("change point or changed cluster count out of range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let centres: Vec<Vec<f64>> = (0..p.communities)
        .map(|c| {
            let a = std::f64::consts::TAU * c as f64 / p.communities as f64;
            vec![3.0 * a.cos(), 3.0 * a.sin()]
        })
        .collect();
    let place = |rng: &mut ChaCha8Rng, c: usize| -> Vec<f64> {
        centres[c].iter().map(|v| v + 0.6 * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let mut train_coords = Vec::new();
    let mut train_cluster = Vec::new();
    let mut test_coords = Vec::new();
    let mut test_cluster = Vec::new();
    for c in 0..p.communities {
        for _ in 0..p.nodes_per_community {
            train_coords.push(place(&mut rng, c));
            train_cluster.push(c);
        }
        for _ in 0..p.test_nodes_per_community {
            test_coords.push(place(&mut rng, c));
            test_cluster.push(c);
        }
    }

    let mut models = vec![(0..p.communities).map(|_| gaussian(&mut rng, p.dim, 1.0)).collect::<Vec<_>>()];
    for t in 1..p.snapshots {
        let next = models[t - 1]
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let step = if t == p.change_point && c < p.changed_communities { p.jump_scale } else { p.drift_std };
                let delta = gaussian(&mut rng, p.dim, step);
                m.iter().zip(delta).map(|(a, b)| a + b).collect()
            })
            .collect();
        models.push(next);
    }

    let base = knn_graph(&train_coords, p.knn, Weighting::Uniform, None)?;
    let mut snapshots = Vec::with_capacity(p.snapshots);
    let mut test_payloads = Vec::with_capacity(p.snapshots);
    for model_t in &models {
        let train: Vec<NodePayload> = train_cluster
            .iter()
            .map(|&c| regression_pairs(&model_t[c], p.examples_per_node, p.noise_std, &mut rng))
            .collect();
        snapshots.push(base.with_payloads(train)?);
        test_payloads.push(
            test_cluster
                .iter()
                .map(|&c| regression_pairs(&model_t[c], p.test_examples_per_node, p.noise_std, &mut rng))
                .collect(),
        );
    }
    Ok(DriftSequence {
        tgraph: TemporalGraph::with_full_links(snapshots, 1.0)?,
        train_coords,
        test_coords,
        test_payloads,
        models,
        change_point: p.change_point,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalConfig {
    pub drift: DriftParams,
    pub c_ridge: f64,
    /// Shared spatial settings and tolerances; `variant` and `lambda2` are
    /// set per variant.
    pub params: STParams,
    /// `λ₂` per variant. For `st_danr` this is the fusion weight `λ₂μ₂`,
    /// matched to `t_son`'s, so the solve uses `λ₂ = value/μ₂`.
    pub lambda2: BTreeMap<String, f64>,
    pub variants: Vec<TemporalVariant>,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        let lambda2 = [("st_danr", 2.0), ("t_son", 2.0), ("t_sos", 1.0), ("none", 0.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Self {
            drift: DriftParams::default(),
            c_ridge: 0.1,
            params: STParams { lambda1: 0.2, mu1: 0.5, mu2: 0.6, eps_primal: 1e-4, eps_dual: 1e-4, ..STParams::default() },
            lambda2,
            variants: TemporalVariant::ALL.to_vec(),
        }
    }
}

impl TemporalConfig {
    fn variant_params(&self, variant: TemporalVariant) -> STParams {
        let level = self.lambda2.get(variant.name()).copied().unwrap_or(self.params.lambda2);
        let lambda2 = match variant {
            TemporalVariant::StDanr => level / self.params.mu2,
            TemporalVariant::None => 0.0,
            _ => level,
        };
        STParams { variant, lambda2, ..self.params.clone() }
    }
}

fn test_mse(seq: &DriftSequence, t: usize, x: &[Vec<f64>], k: usize) -> Result<f64, HarnessError> {
    let predicted = predict_unseen(&seq.train_coords, x, &seq.test_coords, k, PredictStrategy::Average)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (model, payload) in predicted.iter().zip(&seq.test_payloads[t]) {
        for (w, y) in payload.observations() {
            total += (dot(w, model) - y).powi(2);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

fn ridge_objectives(graph: &Graph, c: f64) -> Result<Vec<NodeObjective>, HarnessError> {
    graph
        .payloads()
        .iter()
        .map(|p| if p.is_empty() { Ok(NodeObjective::zero()) } else { NodeObjective::ridge(p.clone(), c, false) })
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Invalid(e.to_string()))
}

/// Streams every variant through `seq` and records the held-out MSE per
/// snapshot. Temporal variants have no record for the first snapshot.
pub fn run_temporal_experiment(
    seq: &DriftSequence,
    cfg: &TemporalConfig,
    seed: u64,
) -> Result<Vec<EvalRecord>, HarnessError> {
    let objectives: Vec<Vec<NodeObjective>> =
        seq.tgraph.snapshots().iter().map(|g| ridge_objectives(g, cfg.c_ridge)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for &variant in &cfg.variants {
        let params = cfg.variant_params(variant);
        let clock = Instant::now();
        let outcome = run_streaming(&seq.tgraph, &objectives, &params);
        let secs = clock.elapsed().as_secs_f64();
        let base = EvalRecord {
            experiment: "temporal".into(),
            method: variant.name().into(),
            seed,
            lambda: params.lambda2,
            mu: params.mu2,
            noise: None,
            snapshot: None,
            metric: Metric::Mse,
            value: f64::NAN,
            clusters: 0,
            nonzero_alpha: 0,
            iterations: 0,
            converged: false,
            runtime_secs: secs,
            error: None,
        };
        let first = if variant == TemporalVariant::None { 0 } else { 1 };
        match outcome {
            Ok(stream) => {
                // reports[0] covers snapshot 0; each later report one window.
                let mut per_snapshot = Vec::new();
                for (i, r) in stream.reports.iter().enumerate() {
                    for _ in 0..r.x.len() {
                        per_snapshot.push((i, r));
                    }
                }
                for t in first..seq.tgraph.snapshot_count() {
                    let (_, report) = per_snapshot[t];
                    out.push(EvalRecord {
                        snapshot: Some(t + 1),
                        value: test_mse(seq, t, &stream.models[t], cfg.drift.knn)?,
                        nonzero_alpha: report.nonzero_beta(1e-6),
                        iterations: report.iterations,
                        converged: report.converged,
                        ..base.clone()
                    });
                }
            }
            Err(e) => {
                for t in first..seq.tgraph.snapshot_count() {
                    out.push(EvalRecord { snapshot: Some(t + 1), error: Some(e.to_string()), ..base.clone() });
                }
            }
        }
    }
    Ok(out)
}

/// [`run_temporal_experiment`] on a fresh sequence per seed.
pub fn run_temporal_sweep(cfg: &TemporalConfig, seeds: &[u64]) -> Result<Vec<EvalRecord>, HarnessError> {
    use rayon::prelude::*;
    let per_seed: Vec<Vec<EvalRecord>> = seeds
        .par_iter()
        .map(|&seed| {
            let seq = gen_drifting_clusters(&DriftParams { seed, ..cfg.drift.clone() })?;
            run_temporal_experiment(&seq, cfg, seed)
        })
        .collect::<Result<_, _>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Mean MSE per (variant, snapshot) over seeds; `None` where a variant has
/// no value for a snapshot.
pub fn temporal_table(records: &[EvalRecord], snapshots: usize) -> Vec<(String, Vec<Option<f64>>)> {
    let mut methods: Vec<String> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let row = (1..=snapshots)
                .map(|s| {
                    let vals: Vec<f64> = records
                        .iter()
                        .filter(|r| r.method == m && r.snapshot == Some(s) && r.error.is_none())
                        .map(|r| r.value)
                        .collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            (m, row)
        })
        .collect()
}

/// Writes `method,1,2,…` with `N/A` for missing cells.
pub fn write_temporal_table(path: &Path, table: &[(String, Vec<Option<f64>>)]) -> Result<(), HarnessError> {
    let io = |e| HarnessError::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let width = table.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    let header: Vec<String> = (1..=width).map(|s| s.to_string()).collect();
    writeln!(f, "method,{}", header.join(",")).map_err(io)?;
    for (m, row) in table {
        let cells: Vec<String> = row.iter().map(|v| v.map_or("N/A".to_string(), |x| format!("{x:.6}"))).collect();
        writeln!(f, "{m},{}", cells.join(",")).map_err(io)?;
    }
    f.flush().map_err(io)
}
