use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::partition::Partition;

/// Per-community internal weight (undirected, counted once) and strength totals.
pub(crate) fn community_totals(graph: &WeightedGraph, partition: &Partition) -> (Vec<f64>, Vec<f64>) {
    let k = partition.num_communities();
    let mut internal = vec![0.0; k];
    let mut strength = vec![0.0; k];
    for u in 0..graph.node_count() {
        let cu = partition.community_of(u);
        strength[cu] += graph.strength(u) as f64;
    }
    for (u, v, w) in graph.edges() {
        let cu = partition.community_of(u);
        if cu == partition.community_of(v) {
            internal[cu] += w as f64;
        }
    }
    (internal, strength)
}

fn check(graph: &WeightedGraph, partition: &Partition) -> Result<f64> {
    if partition.len() != graph.node_count() {
        return Err(Error::InconsistentPartition(format!(
            "partition covers {} nodes, graph has {}",
            partition.len(),
            graph.node_count()
        )));
    }
    let m = graph.total_weight();
    if m == 0 {
        return Err(Error::DegenerateGraph);
    }
    Ok(m as f64)
}

/// Linearized Markov Stability of `partition` at Markov time `t`:
/// the sum over same-community ordered pairs of `t·w_ij/2m − s_i·s_j/(2m)²`.
pub fn stability_quality(graph: &WeightedGraph, partition: &Partition, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::ConfigError(format!("Markov time must be positive, got {t}")));
    }
    let m = check(graph, partition)?;
    let two_m = 2.0 * m;
    let (internal, strength) = community_totals(graph, partition);
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(&w, &s)| t * 2.0 * w / two_m - (s / two_m) * (s / two_m))
        .sum())
}

/// Generalized modularity with resolution `gamma`.
///
/// At `gamma = 1/t` this is `stability_quality / t`, so both share maximisers.
pub fn generalized_modularity(graph: &WeightedGraph, partition: &Partition, gamma: f64) -> Result<f64> {
    let m = check(graph, partition)?;
    let two_m = 2.0 * m;
    let (internal, strength) = community_totals(graph, partition);
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(&w, &s)| 2.0 * w / two_m - gamma * (s / two_m) * (s / two_m))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> WeightedGraph {
        let labels = (0..6).map(|i| i.to_string()).collect();
        WeightedGraph::from_edges(
            labels,
            [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)],
        )
        .unwrap()
    }

    /// Direct double sum over ordered node pairs.
    fn brute_quality(g: &WeightedGraph, p: &Partition, t: f64) -> f64 {
        let two_m = 2.0 * g.total_weight() as f64;
        let mut q = 0.0;
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                if p.community_of(i) == p.community_of(j) {
                    q += t * g.weight(i, j) as f64 / two_m
                        - g.strength(i) as f64 * g.strength(j) as f64 / (two_m * two_m);
                }
            }
        }
        q
    }

    #[test]
    fn singleton_partition_has_only_null_terms() {
        let g = two_triangles();
        let p = Partition::singletons(6);
        // every node has strength 2, 2m = 12
        let expected = -6.0 * (2.0f64 / 12.0).powi(2);
        for t in [0.01, 1.0, 50.0] {
            let q = stability_quality(&g, &p, t).unwrap();
            assert!((q - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn two_triangles_value_and_affine_in_time() {
        let g = two_triangles();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1]);
        let q1 = stability_quality(&g, &p, 1.0).unwrap();
        // frozen from the direct double sum: 12/12 - 2 * 36/144
        assert!((q1 - 0.5).abs() < 1e-15);
        assert!((q1 - brute_quality(&g, &p, 1.0)).abs() < 1e-15);
        let q2 = stability_quality(&g, &p, 2.0).unwrap();
        // internal ordered-pair weight fraction = 12/12
        assert!((q2 - q1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_graph_rejected() {
        let g = WeightedGraph::from_edges(vec!["a".into(), "b".into()], []).unwrap();
        assert!(matches!(
            stability_quality(&g, &Partition::singletons(2), 1.0),
            Err(Error::DegenerateGraph)
        ));
    }

    #[test]
    fn modularity_is_scaled_stability() {
        let g = two_triangles();
        let p = Partition::new(vec![0, 0, 1, 1, 2, 2]);
        for t in [0.3, 1.0, 4.0] {
            let q = stability_quality(&g, &p, t).unwrap();
            let m = generalized_modularity(&g, &p, 1.0 / t).unwrap();
            assert!((q / t - m).abs() < 1e-14);
        }
    }
}
