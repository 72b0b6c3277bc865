//! Hard partitions of a node set into contiguous community indices.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of every node `0..n` to a community `0..K`.
///
/// Community indices are always relabelled in order of first appearance, so two
/// partitions that agree up to relabelling compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    num_communities: usize,
}

impl Partition {
    /// Builds a partition from arbitrary community labels.
    pub fn new(labels: Vec<usize>) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        let num_communities = remap.len();
        Partition {
            assignment,
            num_communities,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            num_communities: n,
        }
    }

    pub fn whole(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            num_communities: usize::from(n > 0),
        }
    }

    /// Builds a partition of `labels` from lists of member ids.
    ///
    /// Every label must be covered exactly once and no unknown id may appear.
    pub fn from_communities<S: AsRef<str>>(labels: &[String], communities: &[Vec<S>]) -> Result<Self> {
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut assignment = vec![usize::MAX; labels.len()];
        for (c, members) in communities.iter().enumerate() {
            for id in members {
                let id = id.as_ref();
                let &node = index.get(id).ok_or_else(|| {
                    Error::InconsistentPartition(format!("unknown node `{id}`"))
                })?;
                if assignment[node] != usize::MAX {
                    return Err(Error::InconsistentPartition(format!(
                        "node `{id}` assigned twice"
                    )));
                }
                assignment[node] = c;
            }
        }
        if let Some(missing) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InconsistentPartition(format!(
                "node `{}` is not assigned",
                labels[missing]
            )));
        }
        Ok(Partition::new(assignment))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    #[inline]
    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Member lists, indexed by community, each sorted ascending.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Fraction of communities that contain a single node.
    pub fn singleton_fraction(&self) -> f64 {
        if self.num_communities == 0 {
            return 0.0;
        }
        let singles = self.sizes().iter().filter(|&&s| s == 1).count();
        singles as f64 / self.num_communities as f64
    }

    /// True when every community of `self` lies inside one community of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut parent = vec![usize::MAX; self.num_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            let p = coarser.community_of(node);
            if parent[c] == usize::MAX {
                parent[c] = p;
            } else if parent[c] != p {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabels_by_first_appearance() {
        let p = Partition::new(vec![7, 7, 3, 9, 3]);
        assert_eq!(p.assignment(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.num_communities(), 3);
        assert_eq!(p, Partition::new(vec![1, 1, 0, 5, 0]));
    }

    #[test]
    fn from_communities_rejects_unknown_and_missing() {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let ok = Partition::from_communities(&labels, &[vec!["c"], vec!["a", "b"]]).unwrap();
        assert_eq!(ok.assignment(), &[0, 0, 1]);
        assert!(matches!(
            Partition::from_communities(&labels, &[vec!["a", "b", "z"], vec!["c"]]),
            Err(Error::InconsistentPartition(_))
        ));
        assert!(matches!(
            Partition::from_communities(&labels, &[vec!["a", "b"]]),
            Err(Error::InconsistentPartition(_))
        ));
        assert!(matches!(
            Partition::from_communities(&labels, &[vec!["a", "b"], vec!["b", "c"]]),
            Err(Error::InconsistentPartition(_))
        ));
    }

    #[test]
    fn singleton_fraction_and_refinement() {
        let fine = Partition::new(vec![0, 0, 1, 2, 3]);
        let coarse = Partition::new(vec![0, 0, 0, 1, 1]);
        assert!((fine.singleton_fraction() - 0.75).abs() < 1e-15);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
    }
}
