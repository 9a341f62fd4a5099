//! Planted-community networks where every community shares one linear
//! classifier and each node sees only a handful of labelled examples.

use super::{build_graph, Graph, GraphError, NodePayload};
use crate::linalg::dot;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub num_communities: usize,
    pub nodes_per_community: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub dim: usize,
    pub examples_per_node: usize,
    /// Held-out pairs per node, drawn from the same process.
    pub test_examples_per_node: usize,
    /// Standard deviation of the label noise η.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            num_communities: 5,
            nodes_per_community: 20,
            p_intra: 0.5,
            p_inter: 0.02,
            dim: 10,
            examples_per_node: 5,
            test_examples_per_node: 10,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    /// Graph with the training pairs as payloads.
    pub graph: Graph,
    pub test_payloads: Vec<NodePayload>,
    /// Community of each node.
    pub communities: Vec<usize>,
    /// Ground-truth model of each community.
    pub models: Vec<Vec<f64>>,
}

impl SyntheticNetwork {
    pub fn intra_edge_count(&self) -> usize {
        self.graph
            .edges()
            .iter()
            .filter(|e| self.communities[e.j] == self.communities[e.k])
            .count()
    }
}

// One ChaCha stream per generated quantity.
const STREAM_MODELS: u64 = 0;
const STREAM_EDGES: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_TEST: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `y = sign(wᵀX + η)` with `w ~ N(0, I)`, `η ~ N(0, noise_std²)`; sign(0) = +1.
pub fn sample_pairs<R: Rng>(model: &[f64], count: usize, noise_std: f64, rng: &mut R) -> NodePayload {
    let mut payload = NodePayload::default();
    for _ in 0..count {
        let w: Vec<f64> = (0..model.len()).map(|_| rng.sample(StandardNormal)).collect();
        let eta: f64 = rng.sample::<f64, _>(StandardNormal) * noise_std;
        let y = if dot(&w, model) + eta >= 0.0 { 1.0 } else { -1.0 };
        payload.push(w, y);
    }
    payload
}

fn validate(p: &SyntheticParams) -> Result<(), GraphError> {
    let prob_ok = |x: f64| (0.0..=1.0).contains(&x);
    if !prob_ok(p.p_intra) || !prob_ok(p.p_inter) {
        return Err(GraphError::InvalidParameter("edge probabilities must lie in [0, 1]".into()));
    }
    if p.dim == 0 || p.num_communities == 0 || p.nodes_per_community == 0 {
        return Err(GraphError::InvalidParameter(
            "dim, community count and community size must be positive".into(),
        ));
    }
    if !(p.noise_std.is_finite() && p.noise_std >= 0.0) {
        return Err(GraphError::InvalidParameter("noise_std must be finite and >= 0".into()));
    }
    Ok(())
}

pub fn gen_synthetic(params: &SyntheticParams) -> Result<SyntheticNetwork, GraphError> {
    validate(params)?;
    let n = params.num_communities * params.nodes_per_community;
    let communities: Vec<usize> = (0..n).map(|i| i / params.nodes_per_community).collect();

    let mut rng = stream(params.seed, STREAM_MODELS);
    let models: Vec<Vec<f64>> = (0..params.num_communities)
        .map(|_| (0..params.dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();

    let mut rng = stream(params.seed, STREAM_EDGES);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if communities[i] == communities[j] { params.p_intra } else { params.p_inter };
            if rng.gen::<f64>() < prob {
                edges.push((i, j, 1.0));
            }
        }
    }

    let mut rng = stream(params.seed, STREAM_TRAIN);
    let train: Vec<NodePayload> = (0..n)
        .map(|i| sample_pairs(&models[communities[i]], params.examples_per_node, params.noise_std, &mut rng))
        .collect();
    let mut rng = stream(params.seed, STREAM_TEST);
    let test_payloads: Vec<NodePayload> = (0..n)
        .map(|i| {
            sample_pairs(&models[communities[i]], params.test_examples_per_node, params.noise_std, &mut rng)
        })
        .collect();

    Ok(SyntheticNetwork {
        graph: build_graph(n, &edges, Some(train))?,
        test_payloads,
        communities,
        models,
    })
}

#[derive(Debug, Clone)]
pub struct InterRewire {
    pub graph: Graph,
    /// Fraction of inter-community edges actually reached.
    pub achieved_fraction: f64,
    /// The requested fraction exceeded what the community structure allows.
    pub clipped: bool,
}

/// Drops every inter-community edge, then adds uniformly random
/// inter-community edges until they make up `fraction` of all edges.
pub fn rewire_inter_community<R: Rng>(
    graph: &Graph,
    communities: &[usize],
    fraction: f64,
    rng: &mut R,
) -> Result<InterRewire, GraphError> {
    if !(0.0..=1.0).contains(&fraction) || fraction.is_nan() {
        return Err(GraphError::InvalidParameter(format!("noise fraction {fraction} outside [0, 1]")));
    }
    if communities.len() != graph.node_count() {
        return Err(GraphError::DimensionMismatch("community labels vs node count".into()));
    }
    let intra: Vec<(usize, usize, f64)> = graph
        .edges()
        .iter()
        .filter(|e| communities[e.j] == communities[e.k])
        .map(|e| (e.j, e.k, e.weight))
        .collect();
    let n = graph.node_count();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if communities[i] != communities[j] {
                candidates.push((i, j));
            }
        }
    }
    let wanted = if fraction >= 1.0 {
        usize::MAX
    } else {
        (fraction * intra.len() as f64 / (1.0 - fraction)).round() as usize
    };
    let clipped = wanted > candidates.len();
    let count = wanted.min(candidates.len());
    if clipped {
        log::warn!(
            "requested inter-community fraction {fraction} needs {wanted} edges; only {} possible",
            candidates.len()
        );
    }
    candidates.shuffle(rng);
    let mut edges = intra;
    edges.extend(candidates[..count].iter().map(|&(i, j)| (i, j, 1.0)));
    let total = edges.len();
    let graph = build_graph(n, &edges, Some(graph.payloads().to_vec()))?;
    Ok(InterRewire {
        graph,
        achieved_fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
        clipped,
    })
}
