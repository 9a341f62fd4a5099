use super::*;
use crate::graph::{build_graph, NodePayload, TemporalLink};
use crate::prox::oracle_minimize;
use crate::solver::solve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar(target: f64) -> NodeObjective {
    NodeObjective::ridge(NodePayload::new(vec![vec![1.0]], vec![target]), 0.0, false).unwrap()
}

fn tight(mut p: STParams) -> STParams {
    p.eps_primal = 1e-9;
    p.eps_dual = 1e-9;
    p.max_outer_iters = 50_000;
    p
}

fn single_node(targets: &[f64]) -> (TemporalGraph, Vec<Vec<NodeObjective>>) {
    let snaps = vec![build_graph(1, &[], None).unwrap(); targets.len()];
    let links = (0..targets.len() - 1).map(|t| TemporalLink { node: 0, t, weight: 1.0 }).collect();
    (TemporalGraph::new(snaps, links).unwrap(), targets.iter().map(|&t| vec![scalar(t)]).collect())
}

/// Random ridge problems on `n` nodes over `m` snapshots, fully linked in time.
fn random_instance(n: usize, m: usize, d: usize, seed: u64) -> (TemporalGraph, Vec<Vec<NodeObjective>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snaps = Vec::new();
    let mut objs = Vec::new();
    for _ in 0..m {
        let mut edges = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                if rng.gen_bool(0.6) {
                    edges.push((j, k, rng.gen_range(0.5..1.5)));
                }
            }
        }
        snaps.push(build_graph(n, &edges, None).unwrap());
        objs.push(
            (0..n)
                .map(|_| {
                    let rows: Vec<Vec<f64>> = (0..d + 1).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
                    let ys = (0..d + 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    NodeObjective::ridge(NodePayload::new(rows, ys), 0.1, false).unwrap()
                })
                .collect(),
        );
    }
    let links = (0..m - 1).flat_map(|t| (0..n).map(move |node| TemporalLink { node, t, weight: 1.0 })).collect();
    (TemporalGraph::new(snaps, links).unwrap(), objs)
}

#[test]
fn regularizer_examples() {
    let (tg, _) = single_node(&[0.0, 0.0]);
    let params = STParams { mu2: 0.25, ..Default::default() };
    let same = vec![vec![vec![1.5]], vec![vec![1.5]]];
    for v in TemporalVariant::ALL {
        assert_eq!(temporal_regularizer_value(v, &same, &[vec![0.0]], &tg, &params), 0.0);
    }
    let apart = vec![vec![vec![2.0]], vec![vec![0.0]]];
    assert_eq!(temporal_regularizer_value(TemporalVariant::TSon, &apart, &[vec![0.0]], &tg, &params), 2.0);
    assert_eq!(temporal_regularizer_value(TemporalVariant::TSos, &apart, &[vec![0.0]], &tg, &params), 4.0);
    assert_eq!(temporal_regularizer_value(TemporalVariant::None, &apart, &[vec![0.0]], &tg, &params), 0.0);
    let buffered = temporal_regularizer_value(TemporalVariant::StDanr, &apart, &[vec![-2.0]], &tg, &params);
    assert!((buffered - 0.75 * 2.0).abs() < 1e-15);
}

#[test]
fn objective_examples() {
    let g = build_graph(2, &[(0, 1, 1.0)], None).unwrap();
    let tg = TemporalGraph::with_full_links(vec![g.clone(), g], 1.0).unwrap();
    let zero = vec![vec![NodeObjective::zero(), NodeObjective::zero()]; 2];
    let x = vec![vec![vec![0.7, -1.0]; 2]; 2];
    let a = vec![vec![vec![0.0; 2]]; 2];
    let b = vec![vec![0.0; 2]; 2];
    assert_eq!(st_objective(&tg, &zero, &x, &a, &b, &STParams::default()).unwrap(), 0.0);

    // Two nodes over two snapshots, d = 1, every term written out.
    let objs = vec![vec![scalar(1.0), scalar(0.0)], vec![scalar(2.0), scalar(-1.0)]];
    let x = vec![vec![vec![0.5], vec![0.0]], vec![vec![1.0], vec![-0.5]]];
    let a = vec![vec![vec![0.25]], vec![vec![-0.5]]];
    let b = vec![vec![0.1], vec![-0.2]];
    let params = STParams { lambda1: 2.0, mu1: 0.6, lambda2: 3.0, mu2: 0.4, p: 3.0, ..Default::default() };
    let losses = 0.25 + 0.0 + 1.0 + 0.25;
    let spatial = 2.0 * (0.6 * ((0.5_f64 + 0.25 - 0.0).abs() + (1.0_f64 - 0.5 + 0.5).abs()) + 0.4 * (0.25 + 0.5));
    let temporal = 3.0 * (0.4 * ((0.5_f64 + 0.1 - 1.0).abs() + (0.0_f64 - 0.2 + 0.5).abs()) + 0.6 * (0.1 + 0.2));
    let got = st_objective(&tg, &objs, &x, &a, &b, &params).unwrap();
    assert!((got - (losses + spatial + temporal)).abs() < 1e-12, "{got}");
}

#[test]
fn single_snapshot_matches_static_solver() {
    let (tg, objs) = random_instance(6, 1, 2, 3);
    let params = STParams { lambda1: 0.8, mu1: 0.6, ..Default::default() };
    let batch = solve_batch(&tg, &objs, &params).unwrap();
    let stat = solve(&tg.snapshots()[0], &objs[0], &params.spatial()).unwrap();
    assert_eq!(batch.iterations, stat.iterations);
    for (a, b) in batch.x[0].iter().flatten().zip(stat.x.iter().flatten()) {
        assert!((a - b).abs() <= 1e-8);
    }
    assert!((batch.final_objective() - stat.final_objective()).abs() <= 1e-8);
    assert!(batch.beta.is_empty());
}

#[test]
fn zero_temporal_penalty_decouples_snapshots() {
    let (tg, objs) = random_instance(5, 3, 2, 11);
    let params = tight(STParams { lambda1: 1.2, mu1: 0.7, lambda2: 0.0, ..Default::default() });
    let batch = solve_batch(&tg, &objs, &params).unwrap();
    let mut spatial = params.spatial();
    spatial.eps_primal = 1e-9;
    spatial.eps_dual = 1e-9;
    spatial.max_outer_iters = 50_000;
    for t in 0..3 {
        let alone = solve(&tg.snapshots()[t], &objs[t], &spatial).unwrap();
        for (a, b) in batch.x[t].iter().flatten().zip(alone.x.iter().flatten()) {
            assert!((a - b).abs() <= 1e-5, "snapshot {t}: {a} vs {b}");
        }
    }
}

#[test]
fn sum_of_squares_matches_tridiagonal_solve() {
    let (tg, objs) = single_node(&[0.0, 0.0, 3.0]);
    let lam = 0.7;
    let params = tight(STParams { lambda2: lam, variant: TemporalVariant::TSos, ..Default::default() });
    let r = solve_batch(&tg, &objs, &params).unwrap();
    // Stationarity of Σ(x_t − y_t)² + λ Σ(x_t − x_{t+1})²: (I + λL) x = y.
    let m = [1.0 + lam, -lam, 0.0, -lam, 1.0 + 2.0 * lam, -lam, 0.0, -lam, 1.0 + lam];
    let exact = crate::linalg::solve_spd(&m, &[0.0, 0.0, 3.0]).unwrap();
    for t in 0..3 {
        assert!((r.x[t][0][0] - exact[t]).abs() < 1e-6, "{t}: {} vs {}", r.x[t][0][0], exact[t]);
    }
}

#[test]
fn sum_of_squares_solution_is_stationary() {
    let (tg, objs) = random_instance(3, 3, 2, 5);
    let params = tight(STParams { lambda1: 0.0, lambda2: 0.9, variant: TemporalVariant::TSos, ..Default::default() });
    let r = solve_batch(&tg, &objs, &params).unwrap();
    let alpha: Vec<Vec<Vec<f64>>> = tg.snapshots().iter().map(|g| vec![vec![0.0; 2]; g.edge_count()]).collect();
    let beta = vec![vec![0.0; 2]; tg.links().len()];
    let f = |x: &Vec<Vec<Vec<f64>>>| st_objective(&tg, &objs, x, &alpha, &beta, &params).unwrap();
    let h = 1e-6;
    for t in 0..3 {
        for j in 0..3 {
            for i in 0..2 {
                let (mut up, mut dn) = (r.x.clone(), r.x.clone());
                up[t][j][i] += h;
                dn[t][j][i] -= h;
                let g = (f(&up) - f(&dn)) / (2.0 * h);
                assert!(g.abs() < 1e-6, "∂f/∂x[{t}][{j}][{i}] = {g}");
            }
        }
    }
}

/// Joint objective over `(x, α, β)` flattened, for a temporal instance with d = 1.
fn joint(tg: &TemporalGraph, objs: &[Vec<NodeObjective>], params: &STParams, z: &[f64]) -> f64 {
    let n = tg.node_count();
    let m = tg.snapshot_count();
    let mut k = 0;
    let mut next = || {
        k += 1;
        vec![z[k - 1]]
    };
    let x: Vec<Vec<Vec<f64>>> = (0..m).map(|_| (0..n).map(|_| next()).collect()).collect();
    let a: Vec<Vec<Vec<f64>>> = tg.snapshots().iter().map(|g| (0..g.edge_count()).map(|_| next()).collect()).collect();
    let b: Vec<Vec<f64>> = (0..tg.links().len()).map(|_| next()).collect();
    st_objective(tg, objs, &x, &a, &b, params).unwrap()
}

#[test]
fn tiny_instance_matches_joint_oracle() {
    let g = build_graph(2, &[(0, 1, 1.0)], None).unwrap();
    let tg = TemporalGraph::with_full_links(vec![g.clone(), g], 1.0).unwrap();
    let objs = vec![vec![scalar(0.0), scalar(2.0)], vec![scalar(3.0), scalar(-1.0)]];
    let params = tight(STParams { lambda1: 1.5, mu1: 0.6, lambda2: 2.0, mu2: 0.5, ..Default::default() });
    let r = solve_batch(&tg, &objs, &params).unwrap();
    let vars = 4 + 2 + 2;
    let z = oracle_minimize(&|z: &[f64]| joint(&tg, &objs, &params, z), vars, 1e-12);
    let best = joint(&tg, &objs, &params, &z);
    let ours = r.final_objective();
    assert!((ours - best).abs() <= 1e-4 * best.abs().max(1.0), "{ours} vs {best}");
}

#[test]
fn streaming_matches_pinned_batch() {
    let (tg, objs) = random_instance(4, 3, 2, 21);
    let params = tight(STParams { lambda1: 0.9, mu1: 0.7, lambda2: 1.1, mu2: 0.6, ..Default::default() });
    let full = solve_batch(&tg, &objs, &params).unwrap();
    let pins: Vec<(usize, usize, Vec<f64>)> = (0..4).map(|j| (0, j, full.x[0][j].clone())).collect();
    let pinned = solve_batch_pinned(&tg, &objs, &params, &pins).unwrap();
    let fixed: Vec<Option<Vec<f64>>> = full.x[0].iter().cloned().map(Some).collect();
    let stream = solve_streaming(&tg, &fixed, &objs, &params).unwrap();
    assert_eq!(stream.x.len(), 2);
    for t in 0..2 {
        for (a, b) in stream.x[t].iter().flatten().zip(pinned.x[t + 1].iter().flatten()) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn pinned_batch_optimum_is_a_streaming_fixed_point() {
    let (tg, objs) = random_instance(4, 3, 2, 8);
    let params = tight(STParams { lambda1: 0.7, mu1: 0.6, lambda2: 1.3, mu2: 0.5, ..Default::default() });
    let check = streaming_fixed_point_check(&tg, &objs, &params, 1e-6).unwrap();
    assert!(check.holds(), "{check:?}");
}

#[test]
fn missing_fixed_model_is_reported() {
    let (tg, objs) = random_instance(3, 2, 2, 1);
    let fixed = vec![Some(vec![0.0, 0.0]), None, Some(vec![0.0, 0.0])];
    let err = solve_streaming(&tg, &fixed, &objs, &STParams::default()).unwrap_err();
    assert!(matches!(err, SolverError::MissingFixedModel { node: 1 }));
}

#[test]
fn zero_temporal_penalty_ignores_fixed_models() {
    let (tg, objs) = random_instance(4, 2, 2, 4);
    let params = tight(STParams { lambda1: 0.6, mu1: 0.5, lambda2: 0.0, ..Default::default() });
    let a = solve_streaming(&tg, &vec![Some(vec![5.0, -5.0]); 4], &objs, &params).unwrap();
    let b = solve_streaming(&tg, &vec![Some(vec![0.0, 0.0]); 4], &objs, &params).unwrap();
    assert_eq!(a.x, b.x);
    let mut spatial = params.spatial();
    spatial.eps_primal = 1e-9;
    spatial.eps_dual = 1e-9;
    spatial.max_outer_iters = 50_000;
    let alone = solve(&tg.snapshots()[1], &objs[1], &spatial).unwrap();
    for (p, q) in a.x[0].iter().flatten().zip(alone.x.iter().flatten()) {
        assert!((p - q).abs() <= 1e-5);
    }
}

#[test]
fn streaming_sum_of_norms_soft_fuses_one_coordinate() {
    // (x − 2)² + λ₂|x − 0| is minimized at max(2 − λ₂/2, 0).
    let (tg, objs) = single_node(&[0.0, 2.0]);
    for lam in [0.0, 0.5, 1.0, 2.0, 3.9, 4.0, 6.0, 50.0] {
        let params = tight(STParams { lambda2: lam, variant: TemporalVariant::TSon, ..Default::default() });
        let r = solve_streaming(&tg, &[Some(vec![0.0])], &objs, &params).unwrap();
        let expected = (2.0 - lam / 2.0).max(0.0);
        assert!((r.x[0][0][0] - expected).abs() < 1e-6, "λ₂={lam}: {}", r.x[0][0][0]);
    }
}

#[test]
fn constant_sequence_needs_no_temporal_buffers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let truth = [0.8, -1.1];
    let g = build_graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], None).unwrap();
    let tg = TemporalGraph::with_full_links(vec![g; 4], 1.0).unwrap();
    let objs: Vec<Vec<NodeObjective>> = (0..4)
        .map(|_| {
            (0..4)
                .map(|_| {
                    let rows: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
                    let ys = rows.iter().map(|w| w[0] * truth[0] + w[1] * truth[1] + 0.05 * rng.gen_range(-1.0..1.0)).collect();
                    NodeObjective::ridge(NodePayload::new(rows, ys), 0.0, false).unwrap()
                })
                .collect()
        })
        .collect();
    let params = tight(STParams { lambda1: 0.5, mu1: 0.5, lambda2: 2.0, mu2: 0.3, ..Default::default() });
    let r = solve_batch(&tg, &objs, &params).unwrap();
    assert!(r.converged);
    assert_eq!(r.nonzero_beta(1e-6), 0);
}

#[test]
fn forward_pass_covers_every_snapshot() {
    let (tg, objs) = random_instance(3, 4, 2, 9);
    for window in [1, 2, 3] {
        let out = run_streaming(&tg, &objs, &STParams { window, ..Default::default() }).unwrap();
        assert_eq!(out.models.len(), 4);
        assert_eq!(out.reports.len(), 1 + (3 + window - 1) / window);
    }
}

#[test]
fn variant_names_round_trip() {
    for v in TemporalVariant::ALL {
        assert_eq!(v.name().parse::<TemporalVariant>().unwrap(), v);
    }
    assert!("tsos".parse::<TemporalVariant>().is_err());
}
