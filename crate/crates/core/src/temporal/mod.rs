//! Spatio-temporal network regularization over a sequence of snapshots.
//!
//! Node `j` of snapshot `t` carries its own model `x_{j,t}`. Spatial edges
//! inside a snapshot use the DANR coupling; a temporal link joins `x_{j,t}`
//! and `x_{j,t+1}` through the penalty selected by [`TemporalVariant`]:
//!
//! ```text
//! st_danr  λ₂ μ₂ ω ‖x_{j,t} + β_{j,t} − x_{j,t+1}‖₂ + λ₂ (1 − μ₂) ‖β_{j,t}‖_p
//! t_son    λ₂ ω ‖x_{j,t} − x_{j,t+1}‖₂
//! t_sos    λ₂ ω ‖x_{j,t} − x_{j,t+1}‖₂²
//! none     0
//! ```
//!
//! [`solve_batch`] solves every snapshot jointly. [`solve_streaming`] holds
//! the models of the first snapshot of a window fixed and solves the rest.

use crate::graph::TemporalGraph;
use crate::linalg::all_finite;
use crate::objectives::NodeObjective;
use crate::solver::engine::{run, Anchor, Coupling, Engine, Link, RunLimits};
use crate::solver::{
    danr_objective, edge_coupling, infer_dim, EdgeUpdateRule, Mode, PhaseTimings, SolverError, SolverParams,
    SolverState,
};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalVariant {
    StDanr,
    TSon,
    TSos,
    None,
}

impl TemporalVariant {
    pub const ALL: [TemporalVariant; 4] =
        [TemporalVariant::StDanr, TemporalVariant::TSon, TemporalVariant::TSos, TemporalVariant::None];

    pub fn name(&self) -> &'static str {
        match self {
            TemporalVariant::StDanr => "st_danr",
            TemporalVariant::TSon => "t_son",
            TemporalVariant::TSos => "t_sos",
            TemporalVariant::None => "none",
        }
    }
}

impl FromStr for TemporalVariant {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemporalVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| SolverError::InvalidParameter(format!("unknown temporal variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct STParams {
    pub lambda1: f64,
    pub mu1: f64,
    pub lambda2: f64,
    pub mu2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub p: f64,
    pub variant: TemporalVariant,
    /// Snapshots solved per streaming step.
    pub window: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub max_outer_iters: usize,
    pub edge_update: EdgeUpdateRule,
}

impl Default for STParams {
    fn default() -> Self {
        let s = SolverParams::default();
        Self {
            lambda1: s.lambda,
            mu1: s.mu,
            lambda2: 1.0,
            mu2: 0.5,
            rho1: s.rho1,
            rho2: s.rho1,
            p: s.p,
            variant: TemporalVariant::StDanr,
            window: 1,
            eps_primal: s.eps_primal,
            eps_dual: s.eps_dual,
            max_outer_iters: s.max_outer_iters,
            edge_update: s.edge_update,
        }
    }
}

impl STParams {
    /// Static solver parameters for the spatial part.
    pub fn spatial(&self) -> SolverParams {
        SolverParams {
            lambda: self.lambda1,
            mu: self.mu1,
            p: self.p,
            rho1: self.rho1,
            eps_primal: self.eps_primal,
            eps_dual: self.eps_dual,
            max_outer_iters: self.max_outer_iters,
            mode: Mode::Danr,
            edge_update: self.edge_update,
            ..SolverParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.spatial().validate()?;
        let bad = |msg: String| Err(SolverError::InvalidParameter(msg));
        if !(self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return bad(format!("lambda2 must be finite and >= 0, got {}", self.lambda2));
        }
        if !(self.mu2 > 0.0 && self.mu2 <= 1.0) {
            return bad(format!("mu2 must lie in (0, 1], got {}", self.mu2));
        }
        if !(self.rho2 > 0.0 && self.rho2.is_finite()) {
            return bad(format!("rho2 must be positive, got {}", self.rho2));
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        Ok(())
    }

    fn temporal_coupling(&self, weight: f64) -> Coupling {
        let (l, m) = (self.lambda2, self.mu2);
        match self.variant {
            TemporalVariant::StDanr if m >= 1.0 => Coupling::Fused { c: l * weight },
            TemporalVariant::StDanr => Coupling::Buffered { c1: l * (1.0 - m), c2: l * m * weight },
            TemporalVariant::TSon => Coupling::Fused { c: l * weight },
            TemporalVariant::TSos => Coupling::Squared { c: l * weight },
            TemporalVariant::None => Coupling::Free,
        }
    }
}

/// Result of a spatio-temporal solve. Snapshot indices are relative to the
/// solved range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct STReport {
    /// `x[t][j]`
    pub x: Vec<Vec<Vec<f64>>>,
    /// `alpha[t][e]`, in the edge order of snapshot `t`.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// One buffer per temporal link, in link order; for streaming solves the
    /// boundary links come first.
    pub beta: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub primal_residual_trace: Vec<f64>,
    pub dual_residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub inner_iterations: u64,
    pub timings: PhaseTimings,
}

impl STReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// Temporal links whose buffer has Euclidean norm above `tol`.
    pub fn nonzero_beta(&self, tol: f64) -> usize {
        self.beta.iter().filter(|b| crate::linalg::norm2(b) > tol).count()
    }
}

/// Full spatio-temporal objective at `(x, α, β)`.
pub fn st_objective(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    x: &[Vec<Vec<f64>>],
    alpha: &[Vec<Vec<f64>>],
    beta: &[Vec<f64>],
    params: &STParams,
) -> Result<f64, SolverError> {
    let m = tgraph.snapshot_count();
    if objectives.len() != m || x.len() != m || alpha.len() != m || beta.len() != tgraph.links().len() {
        return Err(SolverError::InvalidParameter("snapshot counts of objectives, x, α and β must match".into()));
    }
    let mut total = 0.0;
    for (t, g) in tgraph.snapshots().iter().enumerate() {
        if alpha[t].len() != g.edge_count() || x[t].len() != g.node_count() {
            return Err(SolverError::InvalidParameter(format!("snapshot {t}: layout does not match the graph")));
        }
        total += danr_objective(g, &objectives[t], &x[t], &alpha[t], params.lambda1, params.mu1, params.p)?;
    }
    Ok(total + params.lambda2 * temporal_regularizer_value(params.variant, x, beta, tgraph, params))
}

/// Temporal penalty without the `λ₂` factor, summed over the links of
/// `tgraph`. `beta` is only read by [`TemporalVariant::StDanr`].
pub fn temporal_regularizer_value(
    variant: TemporalVariant,
    x: &[Vec<Vec<f64>>],
    beta: &[Vec<f64>],
    tgraph: &TemporalGraph,
    params: &STParams,
) -> f64 {
    let unit = STParams { lambda2: 1.0, variant, ..params.clone() };
    tgraph
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let zero;
            let b = match beta.get(i) {
                Some(b) => b.as_slice(),
                None => {
                    zero = vec![0.0; x[l.t][l.node].len()];
                    &zero
                }
            };
            unit.temporal_coupling(l.weight).value(&x[l.t][l.node], &x[l.t + 1][l.node], b, params.p)
        })
        .sum()
}

/// Engine layout for the snapshots `first..M` of a temporal graph. Links
/// out of snapshot `first − 1` become anchors on their fixed models.
struct Problem<'a> {
    engine: Engine<'a>,
    nodes: usize,
    snapshots: usize,
    /// Spatial edge count per solved snapshot.
    edge_counts: Vec<usize>,
    /// Temporal links between solved snapshots.
    inner_links: usize,
}

fn flat_objectives(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    first: usize,
) -> Result<(Vec<NodeObjective>, usize), SolverError> {
    let m = tgraph.snapshot_count();
    let n = tgraph.node_count();
    if objectives.len() != m {
        return Err(SolverError::InvalidParameter(format!("{} objective sets for {m} snapshots", objectives.len())));
    }
    if let Some((t, o)) = objectives.iter().enumerate().find(|(_, o)| o.len() != n) {
        return Err(SolverError::InvalidParameter(format!("snapshot {t}: {} objectives for {n} nodes", o.len())));
    }
    let flat: Vec<NodeObjective> = objectives[first..].iter().flatten().cloned().collect();
    let dim = infer_dim(&flat)?;
    Ok((flat, dim))
}

fn build_problem<'a>(
    tgraph: &TemporalGraph,
    flat: &'a [NodeObjective],
    dim: usize,
    params: &STParams,
    first: usize,
    fixed: Option<&[Option<Vec<f64>>]>,
) -> Result<Problem<'a>, SolverError> {
    let n = tgraph.node_count();
    let spatial = params.spatial();
    let mut links = Vec::new();
    let mut edge_counts = Vec::new();
    for (t, g) in tgraph.snapshots().iter().enumerate().skip(first) {
        let base = (t - first) * n;
        edge_counts.push(g.edge_count());
        links.extend(g.edges().iter().map(|e| Link {
            a: base + e.j,
            b: base + e.k,
            coupling: edge_coupling(&spatial, e.weight),
            rho: params.rho1,
        }));
    }
    let mut inner_links = 0;
    for l in tgraph.links().iter().filter(|l| l.t >= first) {
        let base = (l.t - first) * n;
        links.push(Link { a: base + l.node, b: base + n + l.node, coupling: params.temporal_coupling(l.weight), rho: params.rho2 });
        inner_links += 1;
    }
    let mut anchors = Vec::new();
    if first > 0 {
        let fixed = fixed.unwrap_or(&[]);
        for l in tgraph.links().iter().filter(|l| l.t + 1 == first) {
            let target = fixed.get(l.node).cloned().flatten().ok_or(SolverError::MissingFixedModel { node: l.node })?;
            if target.len() != dim || !all_finite(&target) {
                return Err(SolverError::InvalidParameter(format!("fixed model of node {} is malformed", l.node)));
            }
            anchors.push(Anchor { node: l.node, target, coupling: params.temporal_coupling(l.weight), rho: params.rho2 });
        }
    }
    let engine = Engine::new(flat, dim, links, anchors, params.p, spatial.eps_inner, spatial.max_inner_iters, params.edge_update);
    Ok(Problem { engine, nodes: n, snapshots: tgraph.snapshot_count() - first, edge_counts, inner_links })
}

fn solve_problem(
    problem: &Problem<'_>,
    params: &STParams,
    warm: Option<&SolverState>,
) -> Result<(STReport, SolverState), SolverError> {
    let engine = &problem.engine;
    let mut state = match warm {
        Some(w) if engine.state_fits(w) => {
            let mut s = w.clone();
            s.iteration = 0;
            s
        }
        Some(_) => return Err(SolverError::StateMismatch),
        None => engine.init_state(),
    };
    if state.warm.len() != engine.node_count() {
        state.warm = vec![Vec::new(); engine.node_count()];
    }
    if state.iteration == 0 {
        for (node, fixed) in engine.pinned.iter().enumerate() {
            if let Some(x) = fixed {
                state.x[node * engine.dim..(node + 1) * engine.dim].copy_from_slice(x);
            }
        }
    }
    let limits = RunLimits {
        max_outer: params.max_outer_iters,
        eps_primal: params.eps_primal,
        eps_dual: params.eps_dual,
        residual_balancing: false,
    };
    let trace = run(engine, &mut state, limits)?;
    let models = state.models();
    let x: Vec<Vec<Vec<f64>>> = models.chunks(problem.nodes).map(<[Vec<f64>]>::to_vec).collect();
    let mut alpha = Vec::with_capacity(problem.snapshots);
    let mut e = 0;
    for &count in &problem.edge_counts {
        alpha.push((e..e + count).map(|i| state.buffer(i).to_vec()).collect());
        e += count;
    }
    let spatial_total = e;
    let anchors = engine.buffer_count() - engine.links.len();
    let beta = (0..anchors)
        .map(|i| state.buffer(engine.links.len() + i).to_vec())
        .chain((spatial_total..spatial_total + problem.inner_links).map(|i| state.buffer(i).to_vec()))
        .collect();
    let report = STReport {
        x,
        alpha,
        beta,
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

/// Maps the state of a batch solve with snapshot 0 pinned onto the streaming
/// layout of the same temporal graph.
fn streaming_state_from_batch(tg: &TemporalGraph, batch: &SolverState, stream: &Engine<'_>) -> SolverState {
    let d = batch.dim;
    let n = tg.node_count();
    let e0 = tg.snapshots()[0].edge_count();
    let spatial_rest: usize = tg.snapshots()[1..].iter().map(crate::graph::Graph::edge_count).sum();
    let spatial_all = e0 + spatial_rest;
    let mut st = stream.init_state();
    st.x.copy_from_slice(&batch.x[n * d..]);
    st.warm = batch.warm[n..].to_vec();
    let copy_link = |st: &mut SolverState, from: usize, to: usize| {
        for side in 0..2 {
            let (f, t) = ((2 * from + side) * d, (2 * to + side) * d);
            st.u[t..t + d].copy_from_slice(&batch.u[f..f + d]);
            st.delta[t..t + d].copy_from_slice(&batch.delta[f..f + d]);
        }
        st.buffers[to * d..(to + 1) * d].copy_from_slice(&batch.buffers[from * d..(from + 1) * d]);
    };
    for e in 0..spatial_rest {
        copy_link(&mut st, e0 + e, e);
    }
    let (mut inner, mut anchor) = (spatial_rest, 0);
    let links = stream.links.len();
    for (i, l) in tg.links().iter().enumerate() {
        let from = spatial_all + i;
        if l.t == 0 {
            let (f, t) = ((2 * from + 1) * d, (2 * links + anchor) * d);
            st.u[t..t + d].copy_from_slice(&batch.u[f..f + d]);
            st.delta[t..t + d].copy_from_slice(&batch.delta[f..f + d]);
            let tb = (links + anchor) * d;
            st.buffers[tb..tb + d].copy_from_slice(&batch.buffers[from * d..(from + 1) * d]);
            anchor += 1;
        } else {
            copy_link(&mut st, from, inner);
            inner += 1;
        }
    }
    st
}

/// Outcome of [`streaming_fixed_point_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCheck {
    pub primal: f64,
    pub dual: f64,
    pub tolerance: f64,
}

impl FixedPointCheck {
    pub fn holds(&self) -> bool {
        self.primal < self.tolerance && self.dual < self.tolerance
    }
}

/// Solves `tgraph` in batch with the first snapshot pinned to its batch
/// optimum, carries that state over to the streaming problem on the later
/// snapshots, and takes one streaming iteration from it. The residuals of
/// that step are compared with the stopping tolerance for the per-coordinate
/// level `eps`.
pub fn streaming_fixed_point_check(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
    eps: f64,
) -> Result<FixedPointCheck, SolverError> {
    params.validate()?;
    if tgraph.snapshot_count() < 2 {
        return Err(SolverError::InvalidParameter("need at least two snapshots".into()));
    }
    let first = solve_batch(tgraph, objectives, params)?;
    let (flat, dim) = flat_objectives(tgraph, objectives, 0)?;
    let mut batch = build_problem(tgraph, &flat, dim, params, 0, None)?;
    for (j, x) in first.x[0].iter().enumerate() {
        batch.engine.pinned[j] = Some(x.clone());
    }
    let (_, batch_state) = solve_problem(&batch, params, None)?;
    let fixed: Vec<Option<Vec<f64>>> = first.x[0].iter().cloned().map(Some).collect();
    let (stream_flat, _) = flat_objectives(tgraph, objectives, 1)?;
    let stream = build_problem(tgraph, &stream_flat, dim, params, 1, Some(&fixed))?;
    let mut state = streaming_state_from_batch(tgraph, &batch_state, &stream.engine);
    let res = stream.engine.step(&mut state)?.residuals;
    Ok(FixedPointCheck {
        primal: res.primal,
        dual: res.dual,
        tolerance: crate::solver::stopping_tolerance(eps, stream.engine.slot_count() / 2, dim),
    })
}

/// Jointly solves every snapshot of `tgraph`.
pub fn solve_batch(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
) -> Result<STReport, SolverError> {
    solve_batch_pinned(tgraph, objectives, params, &[])
}

/// Like [`solve_batch`], with the listed `(snapshot, node, model)` triples
/// held fixed.
pub fn solve_batch_pinned(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
    pinned: &[(usize, usize, Vec<f64>)],
) -> Result<STReport, SolverError> {
    params.validate()?;
    let (flat, dim) = flat_objectives(tgraph, objectives, 0)?;
    let mut problem = build_problem(tgraph, &flat, dim, params, 0, None)?;
    for (t, node, x) in pinned {
        if *t >= tgraph.snapshot_count() || *node >= tgraph.node_count() || x.len() != dim {
            return Err(SolverError::InvalidParameter(format!("bad pinned model at snapshot {t}, node {node}")));
        }
        problem.engine.pinned[t * tgraph.node_count() + node] = Some(x.clone());
    }
    solve_problem(&problem, params, None).map(|(r, _)| r)
}

/// Solves snapshots `1..M` of `window` with snapshot 0 fixed to `fixed`
/// (indexed by node; `None` for nodes absent there).
pub fn solve_streaming(
    window: &TemporalGraph,
    fixed: &[Option<Vec<f64>>],
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
) -> Result<STReport, SolverError> {
    solve_streaming_warm(window, fixed, objectives, params, None).map(|(r, _)| r)
}

/// [`solve_streaming`] from an optional warm state, returning the final state.
pub fn solve_streaming_warm(
    window: &TemporalGraph,
    fixed: &[Option<Vec<f64>>],
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
    warm: Option<&SolverState>,
) -> Result<(STReport, SolverState), SolverError> {
    params.validate()?;
    if window.snapshot_count() < 2 {
        return Err(SolverError::InvalidParameter("a streaming window needs the fixed snapshot plus one more".into()));
    }
    let (flat, dim) = flat_objectives(window, objectives, 1)?;
    let problem = build_problem(window, &flat, dim, params, 1, Some(fixed))?;
    solve_problem(&problem, params, warm)
}

/// Models of every snapshot from a forward pass: snapshot 0 is solved on
/// its own, then each following block of `params.window` snapshots is
/// solved with the last solved snapshot fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub models: Vec<Vec<Vec<f64>>>,
    pub reports: Vec<STReport>,
}

pub fn run_streaming(
    tgraph: &TemporalGraph,
    objectives: &[Vec<NodeObjective>],
    params: &STParams,
) -> Result<StreamOutcome, SolverError> {
    params.validate()?;
    let m = tgraph.snapshot_count();
    let first = tgraph.window(0, 1).map_err(|e| SolverError::InvalidParameter(e.to_string()))?;
    let start = solve_batch(&first, &objectives[..1], params)?;
    let mut models = vec![start.x[0].clone()];
    let mut reports = vec![start];
    let mut tau = 0;
    while tau + 1 < m {
        let end = (tau + 1 + params.window).min(m);
        let win = tgraph.window(tau, end).map_err(|e| SolverError::InvalidParameter(e.to_string()))?;
        let fixed: Vec<Option<Vec<f64>>> = models[tau].iter().cloned().map(Some).collect();
        let report = solve_streaming(&win, &fixed, &objectives[tau..end], params)?;
        models.extend(report.x.iter().cloned());
        reports.push(report);
        tau = end - 1;
    }
    Ok(StreamOutcome { models, reports })
}

#[cfg(test)]
mod tests;
