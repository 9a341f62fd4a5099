use super::classification::svm_objectives;
use super::HarnessError;
use crate::graph::{gen_synthetic, SyntheticParams};
use crate::solver::{solve, Mode, SolverParams};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub sizes: Vec<usize>,
    /// Community count, dimension, pair counts and noise; the node count and
    /// edge probabilities are derived per size.
    pub generator: SyntheticParams,
    pub degree_target: f64,
    /// Share of the expected degree that stays inside the community.
    pub intra_share: f64,
    pub c_svm: f64,
    pub solver: SolverParams,
    pub modes: Vec<Mode>,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 500, 1000],
            generator: SyntheticParams::default(),
            degree_target: 20.0,
            intra_share: 0.85,
            c_svm: 0.75,
            solver: SolverParams { lambda: 0.5, mu: 0.5, eps_primal: 1e-3, eps_dual: 1e-3, ..SolverParams::default() },
            modes: vec![Mode::Danr, Mode::NetworkLasso],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub mode: Mode,
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_secs: f64,
}

/// Edge probabilities giving an expected degree of `degree` with
/// `intra_share` of it inside the community.
pub fn degree_probabilities(nodes: usize, communities: usize, degree: f64, intra_share: f64) -> (f64, f64) {
    let size = nodes as f64 / communities as f64;
    let intra = if size > 1.0 { degree * intra_share / (size - 1.0) } else { 0.0 };
    let outside = nodes as f64 - size;
    let inter = if outside > 0.0 { degree * (1.0 - intra_share) / outside } else { 0.0 };
    (intra.min(1.0), inter.min(1.0))
}

/// Times one solve per (size, mode) on graphs whose expected degree stays
/// at `degree_target`. Repeated sizes run once.
pub fn run_scalability(sizes: &[usize], cfg: &ScaleConfig, seed: u64) -> Result<Vec<ScaleRow>, HarnessError> {
    let mut unique: Vec<usize> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if unique.contains(&n) {
            log::warn!("size {n} listed more than once; running it once");
        } else {
            unique.push(n);
        }
    }
    let k = cfg.generator.num_communities;
    let mut rows = Vec::new();
    for n in unique {
        if k == 0 || n % k != 0 || n / k < 2 {
            return Err(HarnessError::Invalid(format!("size {n} must be a multiple of {k} with at least 2 nodes per community")));
        }
        let (p_intra, p_inter) = degree_probabilities(n, k, cfg.degree_target, cfg.intra_share);
        let net = gen_synthetic(&SyntheticParams { nodes_per_community: n / k, p_intra, p_inter, seed, ..cfg.generator.clone() })?;
        let objectives = svm_objectives(&net.graph, cfg.c_svm, false)?;
        let edges = net.graph.edge_count();
        for &mode in &cfg.modes {
            let params = SolverParams { mode, ..cfg.solver.clone() };
            let clock = Instant::now();
            let report = solve(&net.graph, &objectives, &params)?;
            rows.push(ScaleRow {
                mode,
                nodes: n,
                edges,
                mean_degree: 2.0 * edges as f64 / n as f64,
                iterations: report.iterations,
                converged: report.converged,
                runtime_secs: clock.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(rows)
}

pub fn write_scale_csv(path: &Path, rows: &[ScaleRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
