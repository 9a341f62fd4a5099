//! Classification on planted-community networks: one SVM per node, coupled
//! through the network penalty, scored on held-out pairs.

use super::grids::SweepSpec;
use super::results::{EvalRecord, Metric};
use super::HarnessError;
use crate::graph::{gen_synthetic, rewire_inter_community, Graph, NodePayload, SyntheticNetwork, SyntheticParams};
use crate::objectives::NodeObjective;
use crate::solver::{default_cluster_tol, extract_clusters, solve_warm, Mode, SolveReport, SolverParams, SolverState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Local,
    Global,
    NetworkLasso,
    Danr,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Local => "local",
            Method::Global => "global",
            Method::NetworkLasso => "network_lasso",
            Method::Danr => "danr",
        }
    }

    fn mode(&self) -> Mode {
        match self {
            Method::Local => Mode::Local,
            Method::Global => Mode::Global,
            Method::NetworkLasso => Mode::NetworkLasso,
            Method::Danr => Mode::Danr,
        }
    }

    pub const ALL: [Method; 4] = [Method::Local, Method::Global, Method::NetworkLasso, Method::Danr];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationConfig {
    pub generator: SyntheticParams,
    pub c_svm: f64,
    pub bias: bool,
    /// Tolerances, `p` and `ρ` for the network solves; `lambda`, `mu` and
    /// `mode` are set per cell.
    pub solver: SolverParams,
    pub methods: Vec<Method>,
    /// Solve consecutive penalty levels from the previous solution.
    pub continuation: bool,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            generator: SyntheticParams::default(),
            c_svm: 0.75,
            bias: false,
            solver: SolverParams::default(),
            methods: Method::ALL.to_vec(),
            continuation: true,
        }
    }
}

pub fn svm_objectives(graph: &Graph, c: f64, bias: bool) -> Result<Vec<NodeObjective>, HarnessError> {
    graph
        .payloads()
        .iter()
        .map(|p| NodeObjective::svm(p.clone(), c, bias))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Invalid(e.to_string()))
}

/// Fraction of held-out pairs with `sign(score) = y`, where sign(0) = +1.
pub fn accuracy(objectives: &[NodeObjective], x: &[Vec<f64>], test: &[NodePayload]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for ((obj, xi), payload) in objectives.iter().zip(x).zip(test) {
        for (w, y) in payload.observations() {
            let pred = if obj.score(xi, w) >= 0.0 { 1.0 } else { -1.0 };
            hits += usize::from(pred == y);
            total += 1;
        }
    }
    if total == 0 { 0.0 } else { hits as f64 / total as f64 }
}

/// A chain of cells solved in order with warm starts.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Chain {
    seed: u64,
    method: Method,
    mu: f64,
}

pub(crate) struct Instance {
    pub network: SyntheticNetwork,
    pub objectives: Vec<NodeObjective>,
    pub noise: Option<f64>,
}

pub(crate) fn instance(
    cfg: &ClassificationConfig,
    seed: u64,
    noise: Option<f64>,
) -> Result<Instance, HarnessError> {
    let mut network = gen_synthetic(&SyntheticParams { seed, ..cfg.generator.clone() })?;
    if let Some(fraction) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(7);
        network.graph = rewire_inter_community(&network.graph, &network.communities, fraction, &mut rng)?.graph;
    }
    let objectives = svm_objectives(&network.graph, cfg.c_svm, cfg.bias)?;
    Ok(Instance { network, objectives, noise })
}

fn record(
    inst: &Instance,
    chain: &Chain,
    lambda_tilde: f64,
    outcome: Result<(SolveReport, f64), String>,
) -> EvalRecord {
    let base = EvalRecord {
        experiment: if inst.noise.is_some() { "noise".into() } else { "classification".into() },
        method: chain.method.name().into(),
        seed: chain.seed,
        lambda: lambda_tilde,
        mu: chain.mu,
        noise: inst.noise,
        snapshot: None,
        metric: Metric::Accuracy,
        value: f64::NAN,
        clusters: 0,
        nonzero_alpha: 0,
        iterations: 0,
        converged: false,
        runtime_secs: 0.0,
        error: None,
    };
    match outcome {
        Ok((report, secs)) => {
            let clusters = extract_clusters(&inst.network.graph, &report.x, default_cluster_tol(&report.x)).len();
            EvalRecord {
                value: accuracy(&inst.objectives, &report.x, &inst.network.test_payloads),
                clusters,
                nonzero_alpha: report.nonzero_alpha(1e-6),
                iterations: report.iterations,
                converged: report.converged,
                runtime_secs: secs,
                ..base
            }
        }
        Err(e) => EvalRecord { error: Some(e), ..base },
    }
}

fn run_chain(
    inst: &Instance,
    cfg: &ClassificationConfig,
    chain: &Chain,
    lambda_grid: &[f64],
) -> Vec<EvalRecord> {
    let mut params = SolverParams { mode: chain.method.mode(), mu: chain.mu, ..cfg.solver.clone() };
    let levels: &[f64] = match chain.method {
        Method::Local | Method::Global => &[0.0],
        _ => lambda_grid,
    };
    let mut warm: Option<SolverState> = None;
    let mut out = Vec::with_capacity(levels.len());
    for &lt in levels {
        params.lambda = if chain.method == Method::Danr { lt / chain.mu } else { lt };
        let clock = Instant::now();
        let result = solve_warm(&inst.network.graph, &inst.objectives, &params, warm.as_ref());
        let secs = clock.elapsed().as_secs_f64();
        let outcome = match result {
            Ok((report, state)) => {
                if cfg.continuation {
                    warm = Some(state);
                }
                Ok((report, secs))
            }
            Err(e) => {
                warm = None;
                Err(e.to_string())
            }
        };
        out.push(record(inst, chain, lt, outcome));
    }
    out
}

fn chains_for(cfg: &ClassificationConfig, spec: &SweepSpec, seed: u64) -> Vec<Chain> {
    let mut chains = Vec::new();
    for &method in &cfg.methods {
        match method {
            Method::Danr => chains.extend(spec.mu_grid.iter().map(|&mu| Chain { seed, method, mu })),
            _ => chains.push(Chain { seed, method, mu: 1.0 }),
        }
    }
    chains
}

fn run_sweep(spec: &SweepSpec, cfg: &ClassificationConfig, noise: Option<f64>) -> Result<Vec<EvalRecord>, HarnessError> {
    let instances: Vec<Instance> =
        spec.seeds.iter().map(|&s| instance(cfg, s, noise)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, Chain)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, _)| chains_for(cfg, spec, spec.seeds[i]).into_iter().map(move |c| (i, c)))
        .collect();
    let results: Vec<Vec<EvalRecord>> = jobs
        .par_iter()
        .map(|(i, chain)| run_chain(&instances[*i], cfg, chain, &spec.lambda_grid))
        .collect();
    Ok(results.into_iter().flatten().collect())
}

/// Every (seed, method, λ̃, μ) cell of the sweep.
pub fn run_classification_experiment(
    spec: &SweepSpec,
    cfg: &ClassificationConfig,
) -> Result<Vec<EvalRecord>, HarnessError> {
    run_sweep(spec, cfg, None)
}

/// The sweep at each fraction of inter-community edges.
pub fn run_noise_sweep(
    spec: &SweepSpec,
    cfg: &ClassificationConfig,
    noise_levels: &[f64],
) -> Result<Vec<EvalRecord>, HarnessError> {
    for &n in noise_levels {
        if !(0.0..=1.0).contains(&n) {
            return Err(HarnessError::Invalid(format!("noise level {n} outside [0, 1]")));
        }
    }
    let mut out = Vec::new();
    for &n in noise_levels {
        out.extend(run_sweep(spec, cfg, Some(n))?);
    }
    Ok(out)
}

/// Re-solves the single cell `(seed, method, λ̃, μ)` by replaying its chain.
pub fn reproduce_cell(
    spec: &SweepSpec,
    cfg: &ClassificationConfig,
    seed: u64,
    method: Method,
    lambda_tilde: f64,
    mu: f64,
    noise: Option<f64>,
) -> Result<EvalRecord, HarnessError> {
    let inst = instance(cfg, seed, noise)?;
    let chain = Chain { seed, method, mu: if method == Method::Danr { mu } else { 1.0 } };
    let grid: Vec<f64> = if cfg.continuation {
        spec.lambda_grid.iter().copied().filter(|&l| l <= lambda_tilde).collect()
    } else {
        vec![lambda_tilde]
    };
    run_chain(&inst, cfg, &chain, &grid)
        .pop()
        .ok_or_else(|| HarnessError::Invalid("empty λ grid".into()))
}

/// Per-(method, λ̃) summary: DANR takes the best μ per seed, then every
/// method is averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub noise: Option<f64>,
    pub lambda: f64,
    pub mean: f64,
    pub seeds: usize,
}

pub fn summarize_curves(records: &[EvalRecord]) -> Vec<CurvePoint> {
    use std::collections::BTreeMap;
    // (method, noise bits, λ bits) -> seed -> best value
    let mut best: BTreeMap<(String, Option<u64>, u64), BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        let key = (r.method.clone(), r.noise.map(f64::to_bits), r.lambda.to_bits());
        let slot = best.entry(key).or_default().entry(r.seed).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(r.value);
    }
    let mut out: Vec<CurvePoint> = best
        .into_iter()
        .map(|((method, noise, lambda), per_seed)| CurvePoint {
            method,
            noise: noise.map(f64::from_bits),
            lambda: f64::from_bits(lambda),
            mean: per_seed.values().sum::<f64>() / per_seed.len() as f64,
            seeds: per_seed.len(),
        })
        .collect();
    out.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.noise.partial_cmp(&b.noise).unwrap())
            .then(a.lambda.total_cmp(&b.lambda))
    });
    out
}

/// Highest mean accuracy over λ̃ for `method` (at `noise`).
pub fn peak(curves: &[CurvePoint], method: Method, noise: Option<f64>) -> Option<CurvePoint> {
    curves
        .iter()
        .filter(|c| c.method == method.name() && c.noise == noise)
        .max_by(|a, b| a.mean.total_cmp(&b.mean).then(b.lambda.total_cmp(&a.lambda)))
        .cloned()
}

/// Smallest `λ̃` at which the network-lasso solution of each seed collapses
/// to a single cluster, or `None` for seeds that never collapse on the grid.
pub fn critical_lambdas(records: &[EvalRecord], noise: Option<f64>) -> Vec<(u64, Option<f64>)> {
    use std::collections::BTreeMap;
    let mut per_seed: BTreeMap<u64, Option<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| {
        r.method == Method::NetworkLasso.name() && r.noise == noise && r.error.is_none()
    }) {
        let slot = per_seed.entry(r.seed).or_insert(None);
        if r.clusters == 1 && slot.map_or(true, |l| r.lambda < l) {
            *slot = Some(r.lambda);
        }
    }
    per_seed.into_iter().collect()
}

/// The peak of every method's seed-mean curve at each noise level, with the
/// `λ̃` where it occurs.
pub fn noise_summary(records: &[EvalRecord]) -> Vec<CurvePoint> {
    let curves = summarize_curves(records);
    let mut out: Vec<CurvePoint> = Vec::new();
    for c in curves.into_iter().filter(|c| c.noise.is_some()) {
        match out.iter_mut().find(|o| o.method == c.method && o.noise == c.noise) {
            Some(o) if c.mean > o.mean => *o = c,
            Some(_) => {}
            None => out.push(c),
        }
    }
    out
}

pub fn write_curves_csv(path: &std::path::Path, points: &[CurvePoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for p in points {
        w.serialize(p).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
