//! Bipartite follow network, its one-mode projections and the consumer hyperedge cover.

use indexmap::IndexSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Which side of the bipartite network to project onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Consumers,
    Influencers,
}

/// Consumers, influencers and the deduplicated follow relation between them.
///
/// Ids are opaque strings. Each side gets a dense index assigned in order of
/// first appearance in the input records.
#[derive(Debug, Clone)]
pub struct BipartiteNetwork {
    consumers: IndexSet<String>,
    influencers: IndexSet<String>,
    follows: Vec<(usize, usize)>,
    following: Vec<Vec<usize>>,
    followers: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NetworkCounts {
    pub consumers: usize,
    pub influencers: usize,
    pub follows: usize,
}

/// Builds the network from `(consumer, influencer)` records, collapsing duplicates.
///
/// Parse errors report the 1-based record number.
pub fn build_bipartite<I, C, S>(records: I) -> Result<BipartiteNetwork>
where
    I: IntoIterator<Item = (C, S)>,
    C: AsRef<str>,
    S: AsRef<str>,
{
    let mut consumers = IndexSet::new();
    let mut influencers = IndexSet::new();
    let mut seen = std::collections::HashSet::new();
    let mut follows = Vec::new();

    for (i, (c, s)) in records.into_iter().enumerate() {
        let (c, s) = (c.as_ref(), s.as_ref());
        if c.is_empty() || s.is_empty() {
            return Err(Error::ParseError {
                line: i + 1,
                message: "empty id".into(),
            });
        }
        let (ci, _) = consumers.insert_full(c.to_owned());
        let (si, _) = influencers.insert_full(s.to_owned());
        if seen.insert((ci, si)) {
            follows.push((ci, si));
        }
    }
    if follows.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if let Some(dup) = consumers.iter().find(|c| influencers.contains(*c)) {
        return Err(Error::OverlappingIds(dup.clone()));
    }

    let mut following = vec![Vec::new(); consumers.len()];
    let mut followers = vec![Vec::new(); influencers.len()];
    for &(c, s) in &follows {
        following[c].push(s);
        followers[s].push(c);
    }
    following.iter_mut().for_each(|v| v.sort_unstable());
    followers.iter_mut().for_each(|v| v.sort_unstable());

    let net = BipartiteNetwork {
        consumers,
        influencers,
        follows,
        following,
        followers,
    };
    let counts = net.counts();
    log::info!(
        "bipartite network: {} consumers, {} influencers, {} follows",
        counts.consumers,
        counts.influencers,
        counts.follows
    );
    Ok(net)
}

impl BipartiteNetwork {
    pub fn counts(&self) -> NetworkCounts {
        NetworkCounts {
            consumers: self.consumers.len(),
            influencers: self.influencers.len(),
            follows: self.follows.len(),
        }
    }

    pub fn consumers(&self) -> &IndexSet<String> {
        &self.consumers
    }

    pub fn influencers(&self) -> &IndexSet<String> {
        &self.influencers
    }

    /// Follow pairs as dense `(consumer, influencer)` indices, in first-seen order.
    pub fn follows(&self) -> &[(usize, usize)] {
        &self.follows
    }

    /// Influencers followed by consumer `c`, sorted.
    pub fn following(&self, c: usize) -> &[usize] {
        &self.following[c]
    }

    /// Consumers following influencer `s`, sorted.
    pub fn followers(&self, s: usize) -> &[usize] {
        &self.followers[s]
    }

    /// Keeps only follows into influencers accepted by `keep`.
    ///
    /// Consumers left without any follow are dropped; the count is logged.
    pub fn restrict_influencers(&self, keep: impl Fn(&str) -> bool) -> Result<BipartiteNetwork> {
        let records = self
            .follows
            .iter()
            .filter(|&&(_, s)| keep(&self.influencers[s]))
            .map(|&(c, s)| (self.consumers[c].as_str(), self.influencers[s].as_str()));
        let restricted = build_bipartite(records)?;
        let dropped = self.consumers.len() - restricted.consumers.len();
        if dropped > 0 {
            log::info!("dropped {dropped} consumers with no remaining follows");
        }
        Ok(restricted)
    }
}

/// Undirected graph with positive integer edge weights and no self-loops.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    labels: Vec<String>,
    adjacency: Vec<Vec<(usize, u64)>>,
    strengths: Vec<u64>,
    total_weight: u64,
}

impl WeightedGraph {
    /// Builds a graph over `labels` from an edge list. Repeated pairs are summed.
    pub fn from_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut acc: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::ConfigError(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::ConfigError(format!("self-loop on node {u}")));
            }
            if w == 0 {
                return Err(Error::ConfigError(format!("zero weight on edge ({u}, {v})")));
            }
            *acc.entry((u.min(v), u.max(v))).or_default() += w;
        }
        let mut adjacency = vec![Vec::new(); n];
        for (&(u, v), &w) in &acc {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        Ok(Self::from_sorted_adjacency(labels, adjacency))
    }

    fn from_sorted_adjacency(labels: Vec<String>, adjacency: Vec<Vec<(usize, u64)>>) -> Self {
        let strengths: Vec<u64> = adjacency
            .iter()
            .map(|a| a.iter().map(|&(_, w)| w).sum())
            .collect();
        let total_weight = strengths.iter().sum::<u64>() / 2;
        WeightedGraph {
            labels,
            adjacency,
            strengths,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Neighbours of `u` with edge weights, sorted by neighbour.
    pub fn neighbors(&self, u: usize) -> &[(usize, u64)] {
        &self.adjacency[u]
    }

    pub fn weight(&self, u: usize, v: usize) -> u64 {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(n, _)| n)
            .map(|i| self.adjacency[u][i].1)
            .unwrap_or(0)
    }

    pub fn strength(&self, u: usize) -> u64 {
        self.strengths[u]
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, adj)| {
            adj.iter()
                .filter(move |&&(v, _)| v > u)
                .map(move |&(v, w)| (u, v, w))
        })
    }
}

/// One-mode projection: two nodes of `side` are joined with weight equal to
/// the number of neighbours they share on the other side.
pub fn project(network: &BipartiteNetwork, side: Side) -> WeightedGraph {
    let (labels, own, other): (&IndexSet<String>, &[Vec<usize>], &[Vec<usize>]) = match side {
        Side::Influencers => (&network.influencers, &network.followers, &network.following),
        Side::Consumers => (&network.consumers, &network.following, &network.followers),
    };
    let n = labels.len();
    let mut counts = vec![0u64; n];
    let mut touched = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for &mid in &own[u] {
            for &v in &other[mid] {
                if v != u {
                    if counts[v] == 0 {
                        touched.push(v);
                    }
                    counts[v] += 1;
                }
            }
        }
        touched.sort_unstable();
        adjacency[u] = touched.iter().map(|&v| (v, counts[v])).collect();
        for &v in &touched {
            counts[v] = 0;
        }
        touched.clear();
    }
    WeightedGraph::from_sorted_adjacency(labels.iter().cloned().collect(), adjacency)
}

/// Consumer hyperedges mirroring the influencer communities of one scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HyperCover {
    pub scale: usize,
    /// `hyperedges[i]` holds the sorted consumer indices following community `i`.
    pub hyperedges: Vec<Vec<usize>>,
}

impl HyperCover {
    pub fn len(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperedges.is_empty()
    }

    /// Number of hyperedges containing each consumer.
    pub fn overlap_counts(&self, n_consumers: usize) -> Vec<usize> {
        let mut counts = vec![0; n_consumers];
        for edge in &self.hyperedges {
            for &c in edge {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Hyperedge `i` = consumers with at least one follow into community `i`.
pub fn hyper_cover(network: &BipartiteNetwork, partition: &Partition, scale: usize) -> Result<HyperCover> {
    if partition.len() != network.influencers.len() {
        return Err(Error::InconsistentPartition(format!(
            "partition covers {} nodes, network has {} influencers",
            partition.len(),
            network.influencers.len()
        )));
    }
    let mut hyperedges = vec![Vec::new(); partition.num_communities()];
    for (c, follows) in network.following.iter().enumerate() {
        for &s in follows {
            let edge: &mut Vec<usize> = &mut hyperedges[partition.community_of(s)];
            if edge.last() != Some(&c) {
                edge.push(c);
            }
        }
    }
    Ok(HyperCover { scale, hyperedges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(records: &[(&str, &str)]) -> BipartiteNetwork {
        build_bipartite(records.iter().copied()).unwrap()
    }

    #[test]
    fn single_record_and_dedup() {
        let n = net(&[("c1", "a")]);
        assert_eq!(
            n.counts(),
            NetworkCounts {
                consumers: 1,
                influencers: 1,
                follows: 1
            }
        );
        let n = net(&[("c1", "a"), ("c1", "a")]);
        assert_eq!(n.counts().follows, 1);
    }

    #[test]
    fn build_errors() {
        let empty: Vec<(&str, &str)> = vec![];
        assert!(matches!(build_bipartite(empty), Err(Error::EmptyNetwork)));
        assert!(matches!(
            build_bipartite([("c1", "a"), ("", "b")]),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            build_bipartite([("x", "a"), ("a", "b")]),
            Err(Error::OverlappingIds(_))
        ));
    }

    #[test]
    fn influencer_projection_counts_shared_consumers() {
        let n = net(&[("c1", "a"), ("c1", "b"), ("c2", "a"), ("c2", "b")]);
        let g = project(&n, Side::Influencers);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), 2);
        assert_eq!(g.total_weight(), 2);

        let n = net(&[("c1", "a"), ("c2", "b")]);
        let g = project(&n, Side::Influencers);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn consumer_projection_counts_shared_influencers() {
        let n = net(&[("c1", "a"), ("c1", "b"), ("c2", "b"), ("c2", "c")]);
        let g = project(&n, Side::Consumers);
        assert_eq!(g.weight(0, 1), 1);
        assert_eq!(g.weight(1, 0), 1);
    }

    #[test]
    fn hyper_cover_definition() {
        let n = net(&[("c1", "a"), ("c1", "b")]);
        let cover = hyper_cover(&n, &Partition::singletons(2), 0).unwrap();
        assert_eq!(cover.hyperedges, vec![vec![0], vec![0]]);
        let cover = hyper_cover(&n, &Partition::whole(2), 0).unwrap();
        assert_eq!(cover.hyperedges, vec![vec![0]]);

        let n = net(&[("c1", "a"), ("c2", "b")]);
        let cover = hyper_cover(&n, &Partition::singletons(2), 0).unwrap();
        assert_eq!(cover.hyperedges, vec![vec![0], vec![1]]);
        assert!(matches!(
            hyper_cover(&n, &Partition::singletons(3), 0),
            Err(Error::InconsistentPartition(_))
        ));
    }

    #[test]
    fn graph_rejects_self_loops_and_zero_weights() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(WeightedGraph::from_edges(labels.clone(), [(0, 0, 1)]).is_err());
        assert!(WeightedGraph::from_edges(labels.clone(), [(0, 1, 0)]).is_err());
        let g = WeightedGraph::from_edges(labels, [(0, 1, 2), (1, 0, 3)]).unwrap();
        assert_eq!(g.weight(0, 1), 5);
        assert_eq!(g.total_weight(), 5);
    }
}
