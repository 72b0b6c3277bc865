mod common;

use std::collections::BTreeSet;

use exposure_core::synth::{generate, PlantedHierarchy};
use exposure_core::{build_bipartite, hyper_cover, project, BipartiteNetwork, Partition, Side};
use proptest::prelude::*;

fn network(edges: &[(u8, u8)]) -> BipartiteNetwork {
    build_bipartite(edges.iter().map(|(c, s)| (format!("c{c}"), format!("s{s}")))).unwrap()
}

fn follows_strategy() -> impl Strategy<Value = Vec<(u8, u8)>> {
    proptest::collection::vec((0u8..30, 0u8..20), 1..150)
}

#[test]
fn isolation_and_inequality_match_pair_loops() {
    let worst = common::index_oracle_error(42, 100);
    assert!(worst <= 1e-12, "largest deviation {worst:e}");
}

#[test]
fn gini_simpson_matches_pair_enumeration_up_to_200() {
    for n in 0..=200u64 {
        for split in [vec![n], vec![n / 2, n - n / 2], vec![n / 3, n / 5, n - n / 3 - n / 5], vec![1; n as usize]] {
            assert!(common::gini_simpson_matches_pairs(&split), "{split:?}");
        }
    }
}

#[test]
fn planted_fixtures_satisfy_hypergraph_identities() {
    for preset in ["two-level", "three-level"] {
        for seed in 0..5 {
            let data = generate(&PlantedHierarchy::preset(preset, seed).unwrap()).unwrap();
            common::hypergraph_identities(&data).unwrap_or_else(|e| panic!("{preset}/{seed}: {e}"));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gini_simpson_random_counts(counts in proptest::collection::vec(0u64..40, 1..6)) {
        prop_assume!(counts.iter().sum::<u64>() <= 200);
        prop_assert!(common::gini_simpson_matches_pairs(&counts));
    }

    #[test]
    fn index_oracles_on_random_graphs(seed in any::<u64>()) {
        prop_assert!(common::index_oracle_error(seed, 4) <= 1e-12);
    }

    #[test]
    fn projection_counts_shared_followers(edges in follows_strategy()) {
        let net = network(&edges);
        let g = project(&net, Side::Influencers);
        let n = net.influencers().len();
        let followers: Vec<BTreeSet<usize>> = (0..n).map(|s| net.followers(s).iter().copied().collect()).collect();
        for u in 0..n {
            for v in 0..n {
                let shared = if u == v { 0 } else { followers[u].intersection(&followers[v]).count() as u64 };
                prop_assert_eq!(g.weight(u, v), shared);
            }
        }
    }

    #[test]
    fn projection_weight_sums_to_follower_pairs(edges in follows_strategy()) {
        let net = network(&edges);
        let g = project(&net, Side::Influencers);
        let pairs: u64 = (0..net.consumers().len())
            .map(|c| {
                let d = net.following(c).len() as u64;
                d * d.saturating_sub(1) / 2
            })
            .sum();
        prop_assert_eq!(g.total_weight(), pairs);
    }

    #[test]
    fn overlap_sum_equals_incidences_and_falls_under_merging(
        edges in follows_strategy(),
        labels in proptest::collection::vec(0usize..8, 20),
        merge in proptest::collection::vec(0usize..3, 8),
    ) {
        let net = network(&edges);
        let n = net.influencers().len();
        let fine = Partition::new(labels[..n].to_vec());
        let coarse = Partition::new((0..n).map(|s| merge[labels[s]]).collect());
        let consumers = net.consumers().len();
        let fine_cover = hyper_cover(&net, &fine, 0).unwrap();
        let coarse_cover = hyper_cover(&net, &coarse, 1).unwrap();
        for cover in [&fine_cover, &coarse_cover] {
            let incidences: usize = cover.hyperedges.iter().map(Vec::len).sum();
            prop_assert_eq!(cover.overlap_counts(consumers).iter().sum::<usize>(), incidences);
        }
        let (a, b) = (fine_cover.overlap_counts(consumers), coarse_cover.overlap_counts(consumers));
        prop_assert!(a.iter().zip(&b).all(|(f, c)| c <= f));
    }
}
