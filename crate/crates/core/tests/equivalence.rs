//! Cross-module invariants: format conversions preserve the edge multiset,
//! every abstraction computes the same aggregation, and input order never
//! changes results.

use std::collections::HashSet;

use proptest::prelude::*;

use aggrbench_core::features::FeatureMatrix;
use aggrbench_core::kernels::oracle::verify_views;
use aggrbench_core::kernels::{aggregate, Abstraction, ReduceOp};
use aggrbench_core::rng::Stream;
use aggrbench_core::synth::gen_erdos_renyi;
use aggrbench_core::topology::{compute_stats, CooGraph, GraphViews};

/// Multiset of weighted edges under a total order usable for comparison.
fn edge_multiset(g: &CooGraph) -> Vec<(u32, u32, u32)> {
    let weights = g.weights();
    let mut out: Vec<(u32, u32, u32)> = (0..g.num_edges())
        .map(|e| {
            let (s, d) = g.edge(e);
            let w = weights.map_or(1.0f32, |w| w[e]);
            (s, d, w.to_bits())
        })
        .collect();
    out.sort_unstable();
    out
}

fn csr_edge_multiset(g: &CooGraph) -> Vec<(u32, u32, u32)> {
    let csr = g.to_csr();
    let mut out = Vec::with_capacity(csr.num_edges());
    for v in 0..csr.num_vertices() {
        let w = csr.row_weights(v);
        for (k, &u) in csr.row(v).iter().enumerate() {
            let bits = w.map_or(1.0f32, |w| w[k]).to_bits();
            out.push((u, v as u32, bits));
        }
    }
    out.sort_unstable();
    out
}

fn csc_edge_multiset(g: &CooGraph) -> Vec<(u32, u32, u32)> {
    let csc = g.to_csc();
    let mut out = Vec::with_capacity(csc.num_edges());
    for u in 0..csc.num_vertices() {
        let w = csc.col_weights(u);
        for (k, &v) in csc.col(u).iter().enumerate() {
            let bits = w.map_or(1.0f32, |w| w[k]).to_bits();
            out.push((u as u32, v, bits));
        }
    }
    out.sort_unstable();
    out
}

prop_compose! {
    /// Arbitrary weighted multigraph with up to 64 vertices and 200 edges.
    fn weighted_graph()(n in 1usize..=64)(
        n in Just(n),
        edges in proptest::collection::vec((0u32..64, 0u32..64), 0..=200),
        weighted in any::<bool>(),
        wseed in any::<u64>(),
    ) -> CooGraph {
        let edges: Vec<(u32, u32)> = edges
            .into_iter()
            .map(|(s, d)| (s % n as u32, d % n as u32))
            .collect();
        let weights = weighted.then(|| {
            let mut s = Stream::new(wseed, 0);
            (0..edges.len()).map(|_| s.next_symmetric()).collect()
        });
        CooGraph::from_edge_list(&edges, n, weights).expect("generated ids are in range")
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conversions_preserve_the_edge_multiset(g in weighted_graph()) {
        let reference = edge_multiset(&g);
        prop_assert_eq!(csr_edge_multiset(&g), reference.clone());
        prop_assert_eq!(csc_edge_multiset(&g), reference);
    }

    #[test]
    fn all_abstractions_agree_with_the_oracle(g in weighted_graph(), fseed in any::<u64>()) {
        let views = GraphViews::from_coo(g);
        for feature_len in [1usize, 3] {
            let report = verify_views(&views, feature_len, fseed, 1e-4).unwrap();
            prop_assert!(report.passed, "checks: {:?}", report.checks);
        }
    }

    #[test]
    fn edge_input_order_is_irrelevant(g in weighted_graph(), shuffle_seed in any::<u64>()) {
        // Rebuild the same graph from a shuffled edge list; canonicalization
        // must make every aggregate bitwise identical. Duplicate ordered pairs
        // are dropped first: their relative order is input-defined, so a
        // shuffle may legitimately reassociate their float reduction.
        let weighted = g.weights().is_some();
        let mut seen = HashSet::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let mut kept_weights: Vec<f32> = Vec::new();
        for e in 0..g.num_edges() {
            let pair = g.edge(e);
            if seen.insert(pair) {
                edges.push(pair);
                if let Some(w) = g.weights() {
                    kept_weights.push(w[e]);
                }
            }
        }
        let base_weights = weighted.then(|| kept_weights.clone());
        let g = CooGraph::from_edge_list(&edges, g.num_vertices(), base_weights).unwrap();

        let mut indices: Vec<usize> = (0..edges.len()).collect();
        let mut s = Stream::new(shuffle_seed, 1);
        for i in (1..indices.len()).rev() {
            let j = s.next_below(i as u64 + 1) as usize;
            indices.swap(i, j);
        }
        let shuffled_edges: Vec<(u32, u32)> = indices.iter().map(|&e| edges[e]).collect();
        let shuffled_weights = weighted.then(|| indices.iter().map(|&e| kept_weights[e]).collect());
        let shuffled =
            CooGraph::from_edge_list(&shuffled_edges, g.num_vertices(), shuffled_weights).unwrap();

        let x = FeatureMatrix::random(g.num_vertices(), 4, 99);
        let a_views = GraphViews::from_coo(g);
        let b_views = GraphViews::from_coo(shuffled);
        for abstraction in Abstraction::ALL {
            for op in [ReduceOp::Add, ReduceOp::Mean, ReduceOp::Max] {
                if !abstraction.supports(op) {
                    continue;
                }
                let (a, ca) = aggregate(&a_views, abstraction, &x, op, weighted).unwrap();
                let (b, cb) = aggregate(&b_views, abstraction, &x, op, weighted).unwrap();
                prop_assert_eq!(a.data(), b.data(), "{}/{}", abstraction.name(), op.name());
                prop_assert_eq!(ca, cb);
            }
        }
    }

    #[test]
    fn stats_stay_in_their_ranges(g in weighted_graph()) {
        let stats = compute_stats(&g);
        prop_assert!(stats.density >= 0.0);
        prop_assert!((0.0..=1.0).contains(&stats.global_clustering_coefficient));
        prop_assert!(stats.load_imbalance >= 1.0 - 1e-12);
        if let Some(alpha) = stats.powerlaw_exponent_mle {
            prop_assert!(alpha > 1.0);
        }
        prop_assert_eq!(stats.num_edges, g.num_edges());
    }
}

#[test]
fn hundred_thousand_edge_roundtrip() {
    let g = gen_erdos_renyi(2000, 0.025, 17).unwrap();
    assert!(g.num_edges() > 90_000, "edges: {}", g.num_edges());
    let reference = edge_multiset(&g);
    assert_eq!(csr_edge_multiset(&g), reference);
    assert_eq!(csc_edge_multiset(&g), reference);
    let report = verify_views(&GraphViews::from_coo(g), 8, 5, 1e-4).unwrap();
    assert!(report.passed);
}
