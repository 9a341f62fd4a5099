use danr::graph::{build_graph, gen_synthetic, knn_graph, load_graph, save_graph, NodePayload, SyntheticParams, Weighting};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>, Vec<NodePayload>)> {
    (2usize..9, 1usize..4).prop_flat_map(|(n, d)| {
        let edges = proptest::collection::vec((0..n, 0..n, 0.01f64..10.0), 0..12)
            .prop_map(|es| {
                let mut seen = std::collections::BTreeSet::new();
                es.into_iter()
                    .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
                    .collect::<Vec<_>>()
            });
        let payloads = proptest::collection::vec(
            proptest::collection::vec((proptest::collection::vec(-1e6f64..1e6, d), -1e3f64..1e3), 0..4),
            n,
        )
        .prop_map(|nodes| {
            nodes
                .into_iter()
                .map(|obs| {
                    let (w, y): (Vec<_>, Vec<_>) = obs.into_iter().unzip();
                    NodePayload::new(w, y)
                })
                .collect::<Vec<_>>()
        });
        (Just(n), edges, payloads)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn saved_graphs_load_bit_for_bit((n, edges, payloads) in arb_graph()) {
        let g = build_graph(n, &edges, Some(payloads)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        save_graph(&g, &path).unwrap();
        prop_assert_eq!(load_graph(&path).unwrap(), g);
    }

    #[test]
    fn knn_degree_is_at_least_k(
        points in proptest::collection::vec(proptest::collection::vec(-50f64..50.0, 2), 5..40),
        k in 1usize..5,
    ) {
        prop_assume!(points.len() > k);
        let g = knn_graph(&points, k, Weighting::Uniform, None).unwrap();
        prop_assert!(g.degrees().iter().all(|&deg| deg >= k));
    }

    #[test]
    fn synthetic_generation_is_reproducible(seed in any::<u64>(), communities in 1usize..4, size in 2usize..8) {
        let p = SyntheticParams { num_communities: communities, nodes_per_community: size, dim: 3, seed, ..Default::default() };
        let (a, b) = (gen_synthetic(&p).unwrap(), gen_synthetic(&p).unwrap());
        prop_assert_eq!(&a.graph, &b.graph);
        prop_assert_eq!(&a.test_payloads, &b.test_payloads);
        prop_assert_eq!(&a.models, &b.models);
    }
}
