//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use danr::graph::{build_graph, Graph, NodePayload, TemporalGraph};
use danr::objectives::NodeObjective;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Owned inputs of one pair subproblem.
#[derive(Debug, Clone)]
pub struct PairCase {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub c: f64,
    pub rho: f64,
}

pub fn pair_case(rng: &mut ChaCha8Rng, d: usize) -> PairCase {
    let scale = [0.1, 1.0, 5.0][rng.gen_range(0..3)];
    PairCase {
        a: gaussian(rng, d, scale),
        b: gaussian(rng, d, scale),
        alpha: {
            let s = scale * rng.gen::<f64>();
            gaussian(rng, d, s)
        },
        c: rng.gen_range(0.01..3.0),
        rho: rng.gen_range(0.1..5.0),
    }
}

#[derive(Debug, Clone)]
pub struct AlphaCase {
    pub v: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
}

pub fn alpha_case(rng: &mut ChaCha8Rng, d: usize, p: f64) -> AlphaCase {
    let scale = rng.gen_range(0.1..3.0);
    AlphaCase { v: gaussian(rng, d, scale), c1: rng.gen_range(0.05..2.0), c2: rng.gen_range(0.05..2.0), p }
}

/// Connected random graph on `n` nodes: a random spanning tree plus extra
/// edges, with scalar-or-planar ridge payloads.
pub fn ridge_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Graph, Vec<NodeObjective>) {
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.gen_range(0..k), k, rng.gen_range(0.3..2.0)));
    }
    for _ in 0..rng.gen_range(0..n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !edges.iter().any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b)) || (x, y) == (a.max(b), a.min(b))) {
            edges.push((a.min(b), a.max(b), rng.gen_range(0.3..2.0)));
        }
    }
    let group_model: Vec<Vec<f64>> = (0..2).map(|_| gaussian(rng, d, 2.0)).collect();
    let payloads: Vec<NodePayload> = (0..n)
        .map(|i| {
            let model = &group_model[usize::from(i >= n / 2)];
            let mut p = NodePayload::default();
            for _ in 0..d + 1 {
                let w = gaussian(rng, d, 1.0);
                let y = w.iter().zip(model).map(|(a, b)| a * b).sum::<f64>() + 0.3 * rng.sample::<f64, _>(StandardNormal);
                p.push(w, y);
            }
            p
        })
        .collect();
    let graph = build_graph(n, &edges, Some(payloads)).unwrap();
    let objectives =
        graph.payloads().iter().map(|p| NodeObjective::ridge(p.clone(), 0.1, false).unwrap()).collect();
    (graph, objectives)
}

/// `m` snapshots sharing one graph, with fresh ridge data per snapshot.
pub fn ridge_sequence(seed: u64, n: usize, m: usize, d: usize) -> (TemporalGraph, Vec<Vec<NodeObjective>>) {
    let mut r = rng(seed);
    let (g, first) = ridge_instance(&mut r, n, d);
    let mut snaps = vec![g.clone()];
    let mut objs = vec![first];
    for _ in 1..m {
        let (_, o) = ridge_instance(&mut r, n, d);
        let g2 = g.with_payloads(o.iter().map(|x| x.payload().clone()).collect()).unwrap();
        let objs_t = g2.payloads().iter().map(|p| NodeObjective::ridge(p.clone(), 0.1, false).unwrap()).collect();
        snaps.push(g2);
        objs.push(objs_t);
    }
    (TemporalGraph::with_full_links(snaps, 1.0).unwrap(), objs)
}
