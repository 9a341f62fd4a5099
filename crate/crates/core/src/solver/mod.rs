//! The static-network solver.
//!
//! [`solve`] minimizes
//!
//! ```text
//! Σ_j f_j(x_j) + λμ Σ_(j,k) ω_jk ‖x_j + α_jk − x_k‖₂ + λ(1 − μ) Σ_(j,k) ‖α_jk‖_p
//! ```
//!
//! by consensus ADMM: each edge holds copies `u_jk`, `u_kj` of its endpoint
//! models and scaled duals `δ`. One outer iteration updates all node models in
//! parallel, then all edges, then all duals.

mod analysis;
pub(crate) mod engine;
mod params;

pub use analysis::{default_cluster_tol, extract_clusters, geometric_median, predict_unseen, PredictStrategy};
pub use engine::{EdgeUpdateRule, PhaseTimings, Residuals, SolverState};
pub use params::{Mode, SolverParams};

use crate::graph::Graph;
use crate::objectives::{pooled_minimizer, NodeObjective, ObjectiveError};
use crate::prox::group_lp_norm;
use engine::{run, Coupling, Engine, Link, RunLimits};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("node {node}: {source}")]
    Objective { node: usize, source: ObjectiveError },
    #[error("non-finite iterate at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },
    #[error("invalid solver input: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} training points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no fixed model supplied for node {node} of the boundary snapshot")]
    MissingFixedModel { node: usize },
    #[error("state does not match the problem layout")]
    StateMismatch,
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub x: Vec<Vec<f64>>,
    /// One buffer per graph edge, in edge order.
    pub alpha: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub primal_residual_trace: Vec<f64>,
    pub dual_residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Inner edge-update iterations summed over the run.
    pub inner_iterations: u64,
    pub timings: PhaseTimings,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// Number of edges whose buffer has Euclidean norm above `tol`.
    pub fn nonzero_alpha(&self, tol: f64) -> usize {
        self.alpha.iter().filter(|a| crate::linalg::norm2(a) > tol).count()
    }

    /// Equality of everything except wall-clock timings.
    pub fn same_numerics(&self, other: &SolveReport) -> bool {
        self.mode == other.mode
            && self.x == other.x
            && self.alpha == other.alpha
            && self.objective_trace == other.objective_trace
            && self.primal_residual_trace == other.primal_residual_trace
            && self.dual_residual_trace == other.dual_residual_trace
            && self.iterations == other.iterations
            && self.converged == other.converged
            && self.inner_iterations == other.inner_iterations
    }

    /// JSON with models, per-edge buffer norms and traces.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode,
            "models": self.x,
            "alpha_norms": self.alpha.iter().map(|a| crate::linalg::norm2(a)).collect::<Vec<_>>(),
            "objective_trace": self.objective_trace,
            "primal_residual_trace": self.primal_residual_trace,
            "dual_residual_trace": self.dual_residual_trace,
            "iterations": self.iterations,
            "converged": self.converged,
            "inner_iterations": self.inner_iterations,
            "timings": self.timings,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<(), SolverError> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        std::fs::write(path, text).map_err(|source| SolverError::Io { path: path.display().to_string(), source })
    }

    /// CSV with columns `iter,objective,r_norm,s_norm`.
    pub fn write_trace_csv(&self, path: &Path) -> Result<(), SolverError> {
        let io = |source| SolverError::Io { path: path.display().to_string(), source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "iter,objective,r_norm,s_norm").map_err(io)?;
        for i in 0..self.objective_trace.len() {
            writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                self.objective_trace[i],
                self.primal_residual_trace[i],
                self.dual_residual_trace[i]
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Full objective on node models and buffers.
pub fn danr_objective(
    graph: &Graph,
    objectives: &[NodeObjective],
    x: &[Vec<f64>],
    alpha: &[Vec<f64>],
    lambda: f64,
    mu: f64,
    p: f64,
) -> Result<f64, SolverError> {
    let mut total = 0.0;
    for (node, (obj, xi)) in objectives.iter().zip(x).enumerate() {
        total += obj.loss_eval(xi).map_err(|source| SolverError::Objective { node, source })?;
    }
    let mut fusion = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let gap: f64 = (0..x[edge.j].len())
            .map(|i| (x[edge.j][i] + alpha[e][i] - x[edge.k][i]).powi(2))
            .sum::<f64>()
            .sqrt();
        fusion += edge.weight * gap;
    }
    let buffers = if mu < 1.0 { group_lp_norm(alpha.iter().map(Vec::as_slice), p) } else { 0.0 };
    Ok(total + lambda * mu * fusion + lambda * (1.0 - mu) * buffers)
}

pub(crate) fn infer_dim(objectives: &[NodeObjective]) -> Result<usize, SolverError> {
    objectives
        .iter()
        .find_map(NodeObjective::dim)
        .ok_or_else(|| SolverError::InvalidParameter("cannot infer model dimension: no node carries data".into()))
}

fn check_inputs(graph: &Graph, objectives: &[NodeObjective], params: &SolverParams) -> Result<usize, SolverError> {
    params.validate()?;
    if objectives.len() != graph.node_count() {
        return Err(SolverError::InvalidParameter(format!(
            "{} objectives for {} nodes",
            objectives.len(),
            graph.node_count()
        )));
    }
    let dim = infer_dim(objectives)?;
    if let Some((node, d)) = objectives.iter().enumerate().find_map(|(i, o)| o.dim().filter(|&d| d != dim).map(|d| (i, d))) {
        return Err(SolverError::Objective { node, source: ObjectiveError::DimensionMismatch { expected: dim, got: d } });
    }
    Ok(dim)
}

/// Edge coupling implied by the mode.
pub(crate) fn edge_coupling(params: &SolverParams, weight: f64) -> Coupling {
    match params.mode {
        Mode::Local | Mode::Global => Coupling::Free,
        Mode::NetworkLasso => Coupling::Fused { c: params.lambda * weight },
        Mode::Danr if params.mu >= 1.0 => Coupling::Fused { c: params.lambda * weight },
        Mode::Danr => Coupling::Buffered { c1: params.lambda * (1.0 - params.mu), c2: params.lambda * params.mu * weight },
    }
}

fn build_engine<'a>(graph: &Graph, objectives: &'a [NodeObjective], params: &SolverParams, dim: usize) -> Engine<'a> {
    let links = graph
        .edges()
        .iter()
        .map(|e| Link { a: e.j, b: e.k, coupling: edge_coupling(params, e.weight), rho: params.rho1 })
        .collect();
    Engine::new(
        objectives,
        dim,
        links,
        Vec::new(),
        params.p,
        params.eps_inner,
        params.max_inner_iters,
        params.edge_update,
    )
}

/// All-zero iterate for `graph` at model dimension `dim`.
pub fn init_state(graph: &Graph, _params: &SolverParams, dim: usize) -> SolverState {
    SolverState::zeros(graph.node_count(), 2 * graph.edge_count(), graph.edge_count(), dim)
}

/// One outer iteration in place.
pub fn admm_iterate(
    state: &mut SolverState,
    graph: &Graph,
    objectives: &[NodeObjective],
    params: &SolverParams,
) -> Result<Residuals, SolverError> {
    check_inputs(graph, objectives, params)?;
    let engine = build_engine(graph, objectives, params, state.dim());
    if !engine.state_fits(state) {
        return Err(SolverError::StateMismatch);
    }
    Ok(engine.step(state)?.residuals)
}

pub fn solve(graph: &Graph, objectives: &[NodeObjective], params: &SolverParams) -> Result<SolveReport, SolverError> {
    solve_warm(graph, objectives, params, None).map(|(r, _)| r)
}

/// Like [`solve`], starting from `warm` when given, and returning the final
/// iterate for later warm starts.
pub fn solve_warm(
    graph: &Graph,
    objectives: &[NodeObjective],
    params: &SolverParams,
    warm: Option<&SolverState>,
) -> Result<(SolveReport, SolverState), SolverError> {
    let dim = check_inputs(graph, objectives, params)?;
    let m = graph.edge_count();
    match params.mode {
        Mode::Local | Mode::Global => {
            let clock = Instant::now();
            let x: Vec<Vec<f64>> = if params.mode == Mode::Local {
                objectives
                    .iter()
                    .enumerate()
                    .map(|(node, o)| o.standalone_minimizer(dim).map_err(|source| SolverError::Objective { node, source }))
                    .collect::<Result<_, _>>()?
            } else {
                let shared = pooled_minimizer(objectives, dim).map_err(|source| SolverError::Objective { node: 0, source })?;
                vec![shared; graph.node_count()]
            };
            let elapsed = clock.elapsed().as_secs_f64();
            let alpha = vec![vec![0.0; dim]; m];
            let lambda = if params.mode == Mode::Local { 0.0 } else { params.lambda };
            let objective = danr_objective(graph, objectives, &x, &alpha, lambda, params.mu, params.p)?;
            let mut state = init_state(graph, params, dim);
            for (i, xi) in x.iter().enumerate() {
                state.x[i * dim..(i + 1) * dim].copy_from_slice(xi);
            }
            for (e, edge) in graph.edges().iter().enumerate() {
                state.u[2 * e * dim..(2 * e + 1) * dim].copy_from_slice(&x[edge.j]);
                state.u[(2 * e + 1) * dim..(2 * e + 2) * dim].copy_from_slice(&x[edge.k]);
            }
            state.iteration = 1;
            let report = SolveReport {
                mode: params.mode,
                x,
                alpha,
                objective_trace: vec![objective],
                primal_residual_trace: vec![0.0],
                dual_residual_trace: vec![0.0],
                iterations: 1,
                converged: true,
                inner_iterations: 0,
                timings: PhaseTimings { x_update_secs: elapsed, ..Default::default() },
            };
            Ok((report, state))
        }
        Mode::Danr | Mode::NetworkLasso => {
            let engine = build_engine(graph, objectives, params, dim);
            let mut state = match warm {
                Some(w) if engine.state_fits(w) => {
                    let mut s = w.clone();
                    s.iteration = 0;
                    s
                }
                Some(_) => return Err(SolverError::StateMismatch),
                None => engine.init_state(),
            };
            if state.warm.len() != graph.node_count() {
                state.warm = vec![Vec::new(); graph.node_count()];
            }
            let limits = RunLimits {
                max_outer: params.max_outer_iters,
                eps_primal: params.eps_primal,
                eps_dual: params.eps_dual,
                residual_balancing: params.residual_balancing,
            };
            let trace = run(&engine, &mut state, limits)?;
            let report = SolveReport {
                mode: params.mode,
                x: state.models(),
                alpha: (0..m).map(|e| state.buffer(e).to_vec()).collect(),
                iterations: trace.objective.len(),
                objective_trace: trace.objective,
                primal_residual_trace: trace.primal,
                dual_residual_trace: trace.dual,
                converged: trace.converged,
                inner_iterations: trace.inner_iterations,
                timings: trace.timings,
            };
            Ok((report, state))
        }
    }
}

/// Scaled tolerance used by the stopping test for a graph with `edges`
/// edges at model dimension `dim`.
pub fn stopping_tolerance(eps: f64, edges: usize, dim: usize) -> f64 {
    engine::scaled_tolerance(eps, 2 * edges, dim)
}
