//! Influencer annotations: cross-dimension contingency tables, exact
//! independence tests and the influencer identification filter.

mod filter;
mod fisher;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indices::LabelSet;

pub use filter::{filter_influencers, normalize_text, Account, AccountTable, Allowlists, InfluencerFilterConfig};
pub use fisher::{fisher_exact, FisherMode, FisherResult, DEFAULT_ENUMERATION_BOUND};

/// One `(influencer, dimension, label)` annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Annotation {
    pub influencer: String,
    pub dimension: String,
    pub label: String,
}

/// All annotations, in input order. An influencer may carry several labels
/// on the same dimension.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationTable {
    records: Vec<Annotation>,
}

impl AnnotationTable {
    pub fn new(records: Vec<Annotation>) -> Self {
        AnnotationTable { records }
    }

    pub fn records(&self) -> &[Annotation] {
        &self.records
    }

    /// Dimension names in first-appearance order.
    pub fn dimensions(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.dimension.as_str()))
            .map(|r| r.dimension.as_str())
            .collect()
    }

    pub fn has_dimension(&self, dim: &str) -> bool {
        self.records.iter().any(|r| r.dimension == dim)
    }

    /// Labels per influencer on `dim`, sorted and deduplicated.
    pub fn labels_on(&self, dim: &str) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.dimension == dim) {
            out.entry(r.influencer.as_str()).or_default().insert(r.label.as_str());
        }
        out
    }

    /// Single-valued label set on `dim` restricted to `universe`; other
    /// labels (for instance "Unlabeled") are skipped.
    pub fn label_set(&self, dim: &str, universe: &[&str]) -> LabelSet {
        let mut set = LabelSet::new(universe.iter().copied());
        for r in self.records.iter().filter(|r| r.dimension == dim) {
            let _ = set.insert(&r.influencer, &r.label);
        }
        set
    }
}

/// Counts of influencers annotated on both dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub row_dimension: String,
    pub col_dimension: String,
    pub row_categories: Vec<String>,
    pub col_categories: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    /// Builds a table from raw counts with generic category names.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let cols = counts.first().map_or(0, Vec::len);
        ContingencyTable {
            row_dimension: "rows".into(),
            col_dimension: "cols".into(),
            row_categories: (0..counts.len()).map(|i| format!("r{i}")).collect(),
            col_categories: (0..cols).map(|j| format!("c{j}")).collect(),
            counts,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut out = vec![0; self.col_categories.len()];
        for row in &self.counts {
            for (j, &x) in row.iter().enumerate() {
                out[j] += x;
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Cross-tabulates two annotation dimensions over influencers labelled on both.
///
/// Influencers with several labels on a dimension contribute one count per
/// label combination.
pub fn contingency(annotations: &AnnotationTable, dim_a: &str, dim_b: &str) -> Result<ContingencyTable> {
    for d in [dim_a, dim_b] {
        if !annotations.has_dimension(d) {
            return Err(Error::UnknownDimension(d.to_owned()));
        }
    }
    let a = annotations.labels_on(dim_a);
    let b = annotations.labels_on(dim_b);
    let mut pairs: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for (inf, la) in &a {
        if let Some(lb) = b.get(inf) {
            for &x in la {
                for &y in lb {
                    *pairs.entry((x, y)).or_default() += 1;
                }
            }
        }
    }
    let rows: Vec<String> = pairs
        .keys()
        .map(|k| k.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let cols: Vec<String> = pairs
        .keys()
        .map(|k| k.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    if pairs.is_empty() {
        log::warn!("no influencer is annotated on both `{dim_a}` and `{dim_b}`");
    }
    let mut counts = vec![vec![0; cols.len()]; rows.len()];
    for ((x, y), n) in pairs {
        let i = rows.iter().position(|r| r == x).unwrap();
        let j = cols.iter().position(|c| c == y).unwrap();
        counts[i][j] = n;
    }
    Ok(ContingencyTable {
        row_dimension: dim_a.to_owned(),
        col_dimension: dim_b.to_owned(),
        row_categories: rows,
        col_categories: cols,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(records: &[(&str, &str, &str)]) -> AnnotationTable {
        AnnotationTable::new(
            records
                .iter()
                .map(|&(i, d, l)| Annotation {
                    influencer: i.into(),
                    dimension: d.into(),
                    label: l.into(),
                })
                .collect(),
        )
    }

    #[test]
    fn tally_over_doubly_annotated() {
        let t = ann(&[
            ("a", "ideology", "Left"),
            ("a", "support", "Pro-Lula"),
            ("b", "ideology", "Left"),
            ("b", "support", "Pro-Lula"),
            ("c", "ideology", "Right"),
        ]);
        let table = contingency(&t, "ideology", "support").unwrap();
        assert_eq!(table.row_categories, vec!["Left"]);
        assert_eq!(table.col_categories, vec!["Pro-Lula"]);
        assert_eq!(table.counts, vec![vec![2]]);
        assert_eq!(table.total(), 2);
    }

    #[test]
    fn unknown_and_empty() {
        let t = ann(&[("a", "ideology", "Left"), ("b", "support", "Pro-Lula")]);
        assert!(matches!(
            contingency(&t, "ideology", "type"),
            Err(Error::UnknownDimension(_))
        ));
        let table = contingency(&t, "ideology", "support").unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn label_set_skips_foreign_labels() {
        let t = ann(&[("a", "ideology", "Left"), ("b", "ideology", "Unlabeled")]);
        let set = t.label_set("ideology", &["Left", "Right", "Center"]);
        assert_eq!(set.label_of("a"), Some("Left"));
        assert_eq!(set.label_of("b"), None);
        assert_eq!(t.dimensions(), vec!["ideology"]);
    }
}
