mod common;

use common::{ridge_instance, ridge_sequence as sequence, rng};
use danr::graph::{NodePayload, TemporalGraph};
use danr::objectives::NodeObjective;
use danr::solver::solve;
use danr::temporal::{solve_batch, streaming_fixed_point_check, STParams, TemporalVariant};
use proptest::prelude::*;
use rand::Rng;

fn tight(p: STParams) -> STParams {
    STParams { eps_primal: 1e-10, eps_dual: 1e-10, max_outer_iters: 50_000, ..p }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn one_snapshot_is_the_static_problem(seed in any::<u64>(), n in 2usize..8, d in 1usize..3, l1 in 0.05f64..3.0, mu1 in 0.2f64..1.0) {
        let (tg, objs) = sequence(seed, n, 1, d);
        let params = STParams { lambda1: l1, mu1, ..Default::default() };
        let st = solve_batch(&tg, &objs, &params).unwrap();
        let stat = solve(&tg.snapshots()[0], &objs[0], &params.spatial()).unwrap();
        for (a, b) in st.x[0].iter().flatten().zip(stat.x.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn zero_temporal_weight_decouples(seed in any::<u64>(), n in 2usize..6, m in 2usize..4) {
        let (tg, objs) = sequence(seed, n, m, 2);
        let params = tight(STParams { lambda1: 0.6, mu1: 0.6, lambda2: 0.0, ..Default::default() });
        let st = solve_batch(&tg, &objs, &params).unwrap();
        for t in 0..m {
            let alone = solve(&tg.snapshots()[t], &objs[t], &params.spatial()).unwrap();
            for (a, b) in st.x[t].iter().flatten().zip(alone.x.iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-5, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn pinned_optimum_is_a_streaming_fixed_point(seed in any::<u64>(), n in 2usize..6, variant in prop::sample::select(TemporalVariant::ALL.to_vec())) {
        let (tg, objs) = sequence(seed, n, 3, 2);
        let params = tight(STParams { lambda1: 0.7, mu1: 0.6, lambda2: 1.1, mu2: 0.5, variant, ..Default::default() });
        let check = streaming_fixed_point_check(&tg, &objs, &params, 1e-6).unwrap();
        prop_assert!(check.holds(), "{:?}", check);
    }

    #[test]
    fn constant_models_need_no_temporal_buffers(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let (g, objs) = ridge_instance(&mut r, n, 2);
        let m = 3;
        let snaps = vec![g.clone(); m];
        let objs_seq = vec![objs; m];
        let tg = TemporalGraph::with_full_links(snaps, 1.0).unwrap();
        let mu2 = r.gen_range(0.1..0.4);
        let params = tight(STParams { lambda1: 0.5, mu1: 0.6, lambda2: 2.0, mu2, ..Default::default() });
        let st = solve_batch(&tg, &objs_seq, &params).unwrap();
        prop_assert_eq!(st.nonzero_beta(1e-6), 0);
    }
}

#[test]
fn payload_free_snapshots_are_accepted() {
    let (tg, mut objs) = sequence(3, 4, 2, 2);
    objs[1] = vec![NodeObjective::zero(); 4];
    let empty = tg.snapshots()[1].with_payloads(vec![NodePayload::default(); 4]).unwrap();
    let tg = TemporalGraph::with_full_links(vec![tg.snapshots()[0].clone(), empty], 1.0).unwrap();
    let st = solve_batch(&tg, &objs, &STParams::default()).unwrap();
    assert_eq!(st.x.len(), 2);
}
