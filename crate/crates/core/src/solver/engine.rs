//! Bulk-synchronous ADMM over a set of node models, two-sided links and
//! one-sided anchors.
//!
//! A link couples nodes `a` and `b` through the consensus copies `u_a`, `u_b`
//! and (for buffered links) a buffer `α`; its penalty is evaluated on
//! `x_a + α − x_b`. An anchor couples one node to a fixed vector `t` through a
//! single copy `v`, with penalty evaluated on `t + β − x_node`.
//!
//! Copy slots are laid out as `[link 0 side a, link 0 side b, link 1 side a,
//! …, anchor 0, anchor 1, …]`, each of width `dim`. Buffers follow the same
//! order with one slot per link and per anchor.

use super::SolverError;
use crate::linalg::{dist2, dist2_sq, lp_norm};
use crate::objectives::{NodeObjective, WarmStart};
use crate::prox::edge::{
    alternating_edge_update, anchored_copy, anchored_edge_update, joint_edge_update, squared_anchored_update,
    squared_pair_update,
};
use crate::prox::fused_pair_update_into;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Coupling {
    /// No penalty; the link only mirrors its endpoints.
    Free,
    /// `c2‖gap + α‖₂ + c1‖α‖_p`
    Buffered { c1: f64, c2: f64 },
    /// `c‖gap‖₂`
    Fused { c: f64 },
    /// `c‖gap‖₂²`
    Squared { c: f64 },
}

impl Coupling {
    /// Collapses couplings whose penalty vanishes to [`Coupling::Free`].
    pub(crate) fn normalized(self) -> Self {
        match self {
            Coupling::Buffered { c2, .. } if c2 == 0.0 => Coupling::Free,
            Coupling::Fused { c } | Coupling::Squared { c } if c == 0.0 => Coupling::Free,
            other => other,
        }
    }

    /// Penalty at `first + buffer − second`.
    pub(crate) fn value(&self, first: &[f64], second: &[f64], buffer: &[f64], p: f64) -> f64 {
        match *self {
            Coupling::Free => 0.0,
            Coupling::Buffered { c1, c2 } => {
                let gap: f64 = (0..first.len())
                    .map(|i| (first[i] + buffer[i] - second[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                c2 * gap + c1 * lp_norm(buffer, p)
            }
            Coupling::Fused { c } => c * dist2(first, second),
            Coupling::Squared { c } => c * dist2_sq(first, second),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeUpdateRule {
    /// Exact joint minimization over copies and buffer.
    #[default]
    Joint,
    /// Alternate the closed-form pair update with the buffer subproblem.
    Alternating,
}

#[derive(Debug, Clone)]
pub(crate) struct Link {
    pub a: usize,
    pub b: usize,
    pub coupling: Coupling,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Anchor {
    pub node: usize,
    pub target: Vec<f64>,
    pub coupling: Coupling,
    pub rho: f64,
}

/// Iterate of the ADMM scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub(crate) dim: usize,
    pub(crate) x: Vec<f64>,
    pub(crate) u: Vec<f64>,
    pub(crate) delta: Vec<f64>,
    pub(crate) buffers: Vec<f64>,
    #[serde(skip)]
    pub(crate) warm: Vec<WarmStart>,
    pub(crate) rho_scale: f64,
    pub(crate) iteration: usize,
}

impl SolverState {
    pub(crate) fn zeros(nodes: usize, slots: usize, buffers: usize, dim: usize) -> Self {
        Self {
            dim,
            x: vec![0.0; nodes * dim],
            u: vec![0.0; slots * dim],
            delta: vec![0.0; slots * dim],
            buffers: vec![0.0; buffers * dim],
            warm: vec![Vec::new(); nodes],
            rho_scale: 1.0,
            iteration: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.x.len() / self.dim.max(1)
    }

    /// Number of consensus copies (two per edge).
    pub fn copy_count(&self) -> usize {
        self.u.len() / self.dim.max(1)
    }

    pub fn buffer_count(&self) -> usize {
        self.buffers.len() / self.dim.max(1)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn x(&self, node: usize) -> &[f64] {
        &self.x[node * self.dim..(node + 1) * self.dim]
    }

    pub fn copy(&self, slot: usize) -> &[f64] {
        &self.u[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn dual(&self, slot: usize) -> &[f64] {
        &self.delta[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn buffer(&self, index: usize) -> &[f64] {
        &self.buffers[index * self.dim..(index + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        [&self.x, &self.u, &self.delta, &self.buffers].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn models(&self) -> Vec<Vec<f64>> {
        self.x.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub x_update_secs: f64,
    pub edge_update_secs: f64,
    pub dual_update_secs: f64,
    pub objective_secs: f64,
}

impl PhaseTimings {
    pub(crate) fn add(&mut self, other: &PhaseTimings) {
        self.x_update_secs += other.x_update_secs;
        self.edge_update_secs += other.edge_update_secs;
        self.dual_update_secs += other.dual_update_secs;
        self.objective_secs += other.objective_secs;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

pub(crate) struct StepInfo {
    pub residuals: Residuals,
    pub inner_iterations: u64,
    pub timings: PhaseTimings,
}

pub(crate) struct Engine<'a> {
    pub objectives: &'a [NodeObjective],
    pub pinned: Vec<Option<Vec<f64>>>,
    pub dim: usize,
    pub links: Vec<Link>,
    pub anchors: Vec<Anchor>,
    pub p: f64,
    pub eps_inner: f64,
    pub max_inner: usize,
    pub edge_rule: EdgeUpdateRule,
    // slot -> (node, rho, active)
    slot_node: Vec<usize>,
    slot_rho: Vec<f64>,
    slot_active: Vec<bool>,
    incidence: Vec<Vec<usize>>,
}

impl<'a> Engine<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        objectives: &'a [NodeObjective],
        dim: usize,
        links: Vec<Link>,
        anchors: Vec<Anchor>,
        p: f64,
        eps_inner: f64,
        max_inner: usize,
        edge_rule: EdgeUpdateRule,
    ) -> Self {
        let mut links = links;
        let mut anchors = anchors;
        links.iter_mut().for_each(|l| l.coupling = l.coupling.normalized());
        anchors.iter_mut().for_each(|a| a.coupling = a.coupling.normalized());
        let mut slot_node = Vec::with_capacity(2 * links.len() + anchors.len());
        let mut slot_rho = Vec::new();
        let mut slot_active = Vec::new();
        for l in &links {
            for node in [l.a, l.b] {
                slot_node.push(node);
                slot_rho.push(l.rho);
                slot_active.push(l.coupling != Coupling::Free);
            }
        }
        for a in &anchors {
            slot_node.push(a.node);
            slot_rho.push(a.rho);
            slot_active.push(a.coupling != Coupling::Free);
        }
        let mut incidence = vec![Vec::new(); objectives.len()];
        for (slot, &node) in slot_node.iter().enumerate() {
            if slot_active[slot] {
                incidence[node].push(slot);
            }
        }
        Self {
            objectives,
            pinned: vec![None; objectives.len()],
            dim,
            links,
            anchors,
            p,
            eps_inner,
            max_inner,
            edge_rule,
            slot_node,
            slot_rho,
            slot_active,
            incidence,
        }
    }

    pub fn node_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn slot_count(&self) -> usize {
        self.slot_node.len()
    }

    pub fn buffer_count(&self) -> usize {
        self.links.len() + self.anchors.len()
    }

    pub fn init_state(&self) -> SolverState {
        SolverState::zeros(self.node_count(), self.slot_count(), self.buffer_count(), self.dim)
    }

    pub fn state_fits(&self, st: &SolverState) -> bool {
        st.dim == self.dim
            && st.x.len() == self.node_count() * self.dim
            && st.u.len() == self.slot_count() * self.dim
            && st.delta.len() == st.u.len()
            && st.buffers.len() == self.buffer_count() * self.dim
    }

    fn node_update(&self, node: usize, st_u: &[f64], st_delta: &[f64], scale: f64, warm: &mut WarmStart, out: &mut [f64]) -> Result<(), SolverError> {
        let d = self.dim;
        if let Some(fixed) = &self.pinned[node] {
            out.copy_from_slice(fixed);
            return Ok(());
        }
        let obj = &self.objectives[node];
        let slots = &self.incidence[node];
        let wrap = |source| SolverError::Objective { node, source };
        if slots.is_empty() {
            let x = if obj.kind() == crate::objectives::LossKind::Zero {
                vec![0.0; d]
            } else {
                obj.standalone_minimizer(d).map_err(wrap)?
            };
            out.copy_from_slice(&x);
            return Ok(());
        }
        let mut weight = 0.0;
        let mut center = vec![0.0; d];
        for &s in slots {
            let rho = self.slot_rho[s] * scale;
            weight += rho;
            for i in 0..d {
                center[i] += rho * (st_u[s * d + i] - st_delta[s * d + i]);
            }
        }
        center.iter_mut().for_each(|c| *c /= weight);
        let x = obj.prox(&center, weight, warm).map_err(wrap)?;
        out.copy_from_slice(&x);
        Ok(())
    }

    /// One full outer iteration.
    pub fn step(&self, st: &mut SolverState) -> Result<StepInfo, SolverError> {
        let d = self.dim;
        let scale = st.rho_scale;
        let mut timings = PhaseTimings::default();

        // Phase 1: node models.
        let clock = Instant::now();
        {
            let (u, delta) = (&st.u, &st.delta);
            st.x.par_chunks_mut(d)
                .zip(st.warm.par_iter_mut())
                .enumerate()
                .map(|(node, (xi, warm))| self.node_update(node, u, delta, scale, warm, xi))
                .collect::<Result<Vec<()>, SolverError>>()?;
        }
        timings.x_update_secs = clock.elapsed().as_secs_f64();

        // Phase 2: copies and buffers.
        let clock = Instant::now();
        let u_old = st.u.clone();
        let nl = self.links.len();
        let (u_links, u_anchors) = st.u.split_at_mut(2 * nl * d);
        let (b_links, b_anchors) = st.buffers.split_at_mut(nl * d);
        let (x, delta) = (&st.x, &st.delta);
        let zero = vec![0.0; d];
        let link_iters: Vec<u64> = u_links
            .par_chunks_mut(2 * d)
            .zip(b_links.par_chunks_mut(d))
            .zip(self.links.par_iter())
            .enumerate()
            .map(|(e, ((copies, alpha), link))| {
                let (ua, ub) = copies.split_at_mut(d);
                let xa = &x[link.a * d..(link.a + 1) * d];
                let xb = &x[link.b * d..(link.b + 1) * d];
                if link.coupling == Coupling::Free {
                    ua.copy_from_slice(xa);
                    ub.copy_from_slice(xb);
                    alpha.iter_mut().for_each(|v| *v = 0.0);
                    return 0;
                }
                let da = &delta[2 * e * d..(2 * e + 1) * d];
                let db = &delta[(2 * e + 1) * d..(2 * e + 2) * d];
                let a: Vec<f64> = xa.iter().zip(da).map(|(p, q)| p + q).collect();
                let b: Vec<f64> = xb.iter().zip(db).map(|(p, q)| p + q).collect();
                let rho = link.rho * scale;
                match link.coupling {
                    Coupling::Buffered { c1, c2 } => {
                        let out = match self.edge_rule {
                            EdgeUpdateRule::Joint => joint_edge_update(&a, &b, c1, c2, rho, self.p, alpha, ua, ub),
                            EdgeUpdateRule::Alternating => alternating_edge_update(
                                &a,
                                &b,
                                c1,
                                c2,
                                rho,
                                self.p,
                                self.eps_inner,
                                self.max_inner,
                                alpha,
                                ua,
                                ub,
                            ),
                        };
                        out.iterations as u64
                    }
                    Coupling::Fused { c } => {
                        fused_pair_update_into(&a, &b, &zero, c, rho, ua, ub);
                        1
                    }
                    Coupling::Squared { c } => {
                        squared_pair_update(&a, &b, c, rho, ua, ub);
                        1
                    }
                    Coupling::Free => unreachable!(),
                }
            })
            .collect();
        let anchor_iters: Vec<u64> = u_anchors
            .par_chunks_mut(d)
            .zip(b_anchors.par_chunks_mut(d))
            .zip(self.anchors.par_iter())
            .enumerate()
            .map(|(i, ((v, beta), anchor))| {
                let slot = 2 * nl + i;
                let xn = &x[anchor.node * d..(anchor.node + 1) * d];
                if anchor.coupling == Coupling::Free {
                    v.copy_from_slice(xn);
                    beta.iter_mut().for_each(|b| *b = 0.0);
                    return 0;
                }
                let b: Vec<f64> = xn.iter().zip(&delta[slot * d..(slot + 1) * d]).map(|(p, q)| p + q).collect();
                let rho = anchor.rho * scale;
                match anchor.coupling {
                    Coupling::Buffered { c1, c2 } => {
                        anchored_edge_update(&anchor.target, &b, c1, c2, rho, self.p, beta, v).iterations as u64
                    }
                    Coupling::Fused { c } => {
                        anchored_copy(&anchor.target, &b, c, rho, v);
                        1
                    }
                    Coupling::Squared { c } => {
                        squared_anchored_update(&anchor.target, &b, c, rho, v);
                        1
                    }
                    Coupling::Free => unreachable!(),
                }
            })
            .collect();
        let inner_iterations = link_iters.iter().chain(&anchor_iters).sum();
        timings.edge_update_secs = clock.elapsed().as_secs_f64();

        // Phase 3: scaled duals and residuals.
        let clock = Instant::now();
        let x = &st.x;
        let u = &st.u;
        let parts: Vec<(f64, f64)> = st
            .delta
            .par_chunks_mut(d)
            .enumerate()
            .map(|(slot, dl)| {
                if !self.slot_active[slot] {
                    dl.iter_mut().for_each(|v| *v = 0.0);
                    return (0.0, 0.0);
                }
                let node = self.slot_node[slot];
                let rho = self.slot_rho[slot] * scale;
                let mut r2 = 0.0;
                let mut s2 = 0.0;
                for i in 0..d {
                    let r = x[node * d + i] - u[slot * d + i];
                    dl[i] += r;
                    r2 += r * r;
                    let s = rho * (u_old[slot * d + i] - u[slot * d + i]);
                    s2 += s * s;
                }
                (r2, s2)
            })
            .collect();
        let (r2, s2) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        timings.dual_update_secs = clock.elapsed().as_secs_f64();

        st.iteration += 1;
        if !st.all_finite() {
            return Err(SolverError::NonFinite { iteration: st.iteration, detail: self.non_finite_detail(st) });
        }
        Ok(StepInfo { residuals: Residuals { primal: r2.sqrt(), dual: s2.sqrt() }, inner_iterations, timings })
    }

    fn non_finite_detail(&self, st: &SolverState) -> String {
        let d = self.dim;
        if let Some(node) = (0..self.node_count()).find(|&n| !st.x[n * d..(n + 1) * d].iter().all(|v| v.is_finite())) {
            return format!("model of node {node}");
        }
        if let Some(slot) = (0..self.slot_count()).find(|&s| !st.u[s * d..(s + 1) * d].iter().all(|v| v.is_finite())) {
            return format!("consensus copy {slot} (node {})", self.slot_node[slot]);
        }
        "buffer or dual variable".to_string()
    }

    /// Objective on the node models (not the copies).
    pub fn objective(&self, st: &SolverState) -> Result<f64, SolverError> {
        let d = self.dim;
        let losses: Vec<f64> = (0..self.node_count())
            .into_par_iter()
            .map(|n| {
                self.objectives[n]
                    .loss_eval(&st.x[n * d..(n + 1) * d])
                    .map_err(|source| SolverError::Objective { node: n, source })
            })
            .collect::<Result<_, _>>()?;
        let links: Vec<f64> = self
            .links
            .par_iter()
            .enumerate()
            .map(|(e, l)| {
                l.coupling.value(
                    &st.x[l.a * d..(l.a + 1) * d],
                    &st.x[l.b * d..(l.b + 1) * d],
                    &st.buffers[e * d..(e + 1) * d],
                    self.p,
                )
            })
            .collect();
        let nl = self.links.len();
        let anchors: Vec<f64> = self
            .anchors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.coupling.value(&a.target, &st.x[a.node * d..(a.node + 1) * d], &st.buffers[(nl + i) * d..(nl + i + 1) * d], self.p)
            })
            .collect();
        Ok(losses.iter().chain(&links).chain(&anchors).sum())
    }

    /// Multiplies every ρ by `factor`, rescaling the scaled duals to match.
    pub fn rescale_rho(&self, st: &mut SolverState, factor: f64) {
        st.rho_scale *= factor;
        st.delta.iter_mut().for_each(|v| *v /= factor);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RunLimits {
    pub max_outer: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub residual_balancing: bool,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RunTrace {
    pub objective: Vec<f64>,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub converged: bool,
    pub inner_iterations: u64,
    pub timings: PhaseTimings,
}

/// Scaled absolute tolerance `eps·√(slots·dim)`.
pub(crate) fn scaled_tolerance(eps: f64, slots: usize, dim: usize) -> f64 {
    eps * ((slots * dim) as f64).sqrt()
}

pub(crate) fn run(engine: &Engine<'_>, st: &mut SolverState, limits: RunLimits) -> Result<RunTrace, SolverError> {
    let mut trace = RunTrace::default();
    let tol_p = scaled_tolerance(limits.eps_primal, engine.slot_count(), engine.dim);
    let tol_d = scaled_tolerance(limits.eps_dual, engine.slot_count(), engine.dim);
    for _ in 0..limits.max_outer {
        let info = engine.step(st)?;
        trace.inner_iterations += info.inner_iterations;
        trace.timings.add(&info.timings);
        let clock = Instant::now();
        trace.objective.push(engine.objective(st)?);
        trace.timings.objective_secs += clock.elapsed().as_secs_f64();
        let Residuals { primal, dual } = info.residuals;
        trace.primal.push(primal);
        trace.dual.push(dual);
        if primal <= tol_p && dual <= tol_d {
            trace.converged = true;
            break;
        }
        if limits.residual_balancing {
            if primal > 10.0 * dual {
                engine.rescale_rho(st, 2.0);
            } else if dual > 10.0 * primal {
                engine.rescale_rho(st, 0.5);
            }
        }
    }
    Ok(trace)
}
