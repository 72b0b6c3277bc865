use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

fn membership(graph: &WeightedGraph, community: &[usize]) -> Result<Vec<bool>> {
    if community.is_empty() {
        return Err(Error::InvalidCommunity("community is empty".into()));
    }
    let mut inside = vec![false; graph.node_count()];
    for &u in community {
        if u >= inside.len() {
            return Err(Error::InvalidCommunity(format!("node {u} is not in the graph")));
        }
        if std::mem::replace(&mut inside[u], true) {
            return Err(Error::InvalidCommunity(format!("node {u} listed twice")));
        }
    }
    Ok(inside)
}

/// Normalized cut of a community: `c/(2m_i + c) + c/(2(m − m_i) + c)` with cut
/// weight `c`, internal weight `m_i` and total weight `m`. Zero when `c = 0`.
pub fn structural_isolation(graph: &WeightedGraph, community: &[usize]) -> Result<f64> {
    let inside = membership(graph, community)?;
    let mut cut = 0u64;
    let mut internal = 0u64;
    for &u in community {
        for &(v, w) in graph.neighbors(u) {
            if !inside[v] {
                cut += w;
            } else if v > u {
                internal += w;
            }
        }
    }
    if cut == 0 {
        return Ok(0.0);
    }
    let (c, mi, m) = (cut as f64, internal as f64, graph.total_weight() as f64);
    Ok(c / (2.0 * mi + c) + c / (2.0 * (m - mi) + c))
}

/// Weighted internal degree of each member, in community order.
pub fn internal_degrees(graph: &WeightedGraph, community: &[usize]) -> Result<Vec<f64>> {
    let inside = membership(graph, community)?;
    Ok(community
        .iter()
        .map(|&u| {
            graph
                .neighbors(u)
                .iter()
                .filter(|&&(v, _)| inside[v])
                .map(|&(_, w)| w as f64)
                .sum()
        })
        .collect())
}

/// Gini index of weighted internal degrees, `Σ_{u,v}|k_u − k_v| / (2N²⟨k⟩)`.
/// Zero when the community has no internal edges.
pub fn connectivity_inequality(graph: &WeightedGraph, community: &[usize]) -> Result<f64> {
    let mut k = internal_degrees(graph, community)?;
    Ok(gini_index(&mut k))
}

/// Gini index of non-negative values; zero when they sum to zero.
pub(crate) fn gini_index(values: &mut [f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.is_empty() || mean == 0.0 {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    // Σ over ordered pairs of |x_u − x_v| from the sorted ranks.
    let abs_diff: f64 = 2.0
        * values
            .iter()
            .enumerate()
            .map(|(i, &x)| (2.0 * i as f64 - n + 1.0) * x)
            .sum::<f64>();
    abs_diff / (2.0 * n * n * mean)
}
