//! Selective-exposure indices: community overlap per consumer, and identity
//! diversity, information diversity, structural isolation and connectivity
//! inequality per influencer community, aggregated back to consumers.

mod diversity;
mod structure;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BipartiteNetwork, HyperCover, WeightedGraph};
use crate::partition::Partition;

pub use diversity::{
    domain_of, gini_simpson, identity_diversity, information_diversity, DomainShares, InfoThresholds, LabelSet,
    MissingLabels,
};
pub use structure::{connectivity_inequality, internal_degrees, structural_isolation};

/// Number of hyperedges containing `consumer`.
pub fn community_overlap(cover: &HyperCover, consumer: usize) -> Result<usize> {
    let count = cover
        .hyperedges
        .iter()
        .filter(|e| e.binary_search(&consumer).is_ok())
        .count();
    if count == 0 {
        return Err(Error::NotCovered(consumer.to_string()));
    }
    Ok(count)
}

/// Follow-count weighted mean of community values for every consumer.
///
/// Communities with an absent value are left out of both sums; a consumer
/// with no defined followed community gets `None`.
pub fn aggregate_to_consumer(
    network: &BipartiteNetwork,
    partition: &Partition,
    community_values: &[Option<f64>],
) -> Result<Vec<Option<f64>>> {
    if partition.len() != network.influencers().len() {
        return Err(Error::InconsistentPartition(format!(
            "partition covers {} nodes, network has {} influencers",
            partition.len(),
            network.influencers().len()
        )));
    }
    if community_values.len() != partition.num_communities() {
        return Err(Error::InconsistentPartition(format!(
            "{} community values for {} communities",
            community_values.len(),
            partition.num_communities()
        )));
    }
    Ok((0..network.consumers().len())
        .map(|c| {
            let (mut num, mut den) = (0.0, 0.0);
            for &s in network.following(c) {
                if let Some(x) = community_values[partition.community_of(s)] {
                    num += x;
                    den += 1.0;
                }
            }
            (den > 0.0).then(|| num / den)
        })
        .collect())
}

/// Inputs shared by every scale.
#[derive(Debug, Clone, Copy)]
pub struct IndexInputs<'a> {
    pub network: &'a BipartiteNetwork,
    pub graph: &'a WeightedGraph,
    pub labels: Option<&'a LabelSet>,
    pub shares: Option<&'a DomainShares>,
    pub thresholds: InfoThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityRow {
    pub community: usize,
    pub size: usize,
    pub idd_labeled: Option<f64>,
    pub idd_probability: Option<f64>,
    pub infd: Option<f64>,
    pub si: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsumerRow {
    pub consumer: String,
    pub co: usize,
    pub idd_labeled: Option<f64>,
    pub idd_probability: Option<f64>,
    pub infd: Option<f64>,
    pub si: Option<f64>,
    pub ci: Option<f64>,
}

/// All five indices at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexTable {
    pub scale: usize,
    pub communities: Vec<CommunityRow>,
    pub consumers: Vec<ConsumerRow>,
}

impl IndexTable {
    pub fn compute(inputs: IndexInputs<'_>, partition: &Partition, cover: &HyperCover) -> Result<IndexTable> {
        let IndexInputs {
            network,
            graph,
            labels,
            shares,
            thresholds,
        } = inputs;
        if partition.len() != graph.node_count() {
            return Err(Error::InconsistentPartition(
                "partition does not match the influencer graph".into(),
            ));
        }
        let ids = network.influencers();
        let communities = partition.communities();
        let rows: Vec<CommunityRow> = communities
            .par_iter()
            .enumerate()
            .map(|(i, members)| {
                let names = || members.iter().map(|&u| ids[u].as_str());
                Ok(CommunityRow {
                    community: i,
                    size: members.len(),
                    idd_labeled: labels.and_then(|l| identity_diversity(names(), l, MissingLabels::LabeledOnly)),
                    idd_probability: labels
                        .and_then(|l| identity_diversity(names(), l, MissingLabels::ProbabilityAssignment)),
                    infd: shares.and_then(|s| information_diversity(names(), s, thresholds)),
                    si: structural_isolation(graph, members)?,
                    ci: connectivity_inequality(graph, members)?,
                })
            })
            .collect::<Result<_>>()?;

        let column = |f: fn(&CommunityRow) -> Option<f64>| -> Result<Vec<Option<f64>>> {
            let values: Vec<Option<f64>> = rows.iter().map(f).collect();
            aggregate_to_consumer(network, partition, &values)
        };
        let idd_labeled = column(|r| r.idd_labeled)?;
        let idd_probability = column(|r| r.idd_probability)?;
        let infd = column(|r| r.infd)?;
        let si = column(|r| Some(r.si))?;
        let ci = column(|r| Some(r.ci))?;
        let overlap = cover.overlap_counts(network.consumers().len());

        let consumers = network
            .consumers()
            .iter()
            .enumerate()
            .map(|(c, id)| {
                if overlap[c] == 0 {
                    return Err(Error::NotCovered(id.clone()));
                }
                Ok(ConsumerRow {
                    consumer: id.clone(),
                    co: overlap[c],
                    idd_labeled: idd_labeled[c],
                    idd_probability: idd_probability[c],
                    infd: infd[c],
                    si: si[c],
                    ci: ci[c],
                })
            })
            .collect::<Result<_>>()?;

        Ok(IndexTable {
            scale: cover.scale,
            communities: rows,
            consumers,
        })
    }
}
