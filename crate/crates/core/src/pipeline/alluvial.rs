use std::collections::BTreeMap;

use serde::Serialize;

use crate::annotations::AnnotationTable;
use crate::error::{Error, Result};
use crate::scales::ScaleSweepResult;

/// A community is colored when strictly more than this share of its members is annotated.
pub const MIN_ANNOTATED: f64 = 0.3;
/// ...and strictly more than this share of the annotated members carries one label.
pub const MIN_MAJORITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    pub annotated: usize,
    pub annotated_fraction: f64,
    /// Members per label; a member with several labels counts once for each.
    pub counts: BTreeMap<String, usize>,
    /// Most frequent label, earliest name on ties.
    pub majority: Option<String>,
    /// Majority count over annotated members.
    pub homogeneity: Option<f64>,
    /// The majority label when both coloring thresholds are met.
    pub color: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlluvialCommunity {
    pub community: usize,
    pub size: usize,
    pub labels: BTreeMap<String, LabelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlluvialLevel {
    /// 0 is the finest retained scale.
    pub level: usize,
    pub scale: usize,
    pub markov_time: f64,
    pub communities: Vec<AlluvialCommunity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlluvialFlow {
    pub from_level: usize,
    pub from: usize,
    pub to: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlluvialExport {
    pub levels: Vec<AlluvialLevel>,
    /// Influencer counts between communities of adjacent levels.
    pub flows: Vec<AlluvialFlow>,
}

fn summarize(members: &[usize], ids: &[String], labels: &BTreeMap<&str, Vec<&str>>) -> LabelSummary {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut annotated = 0;
    for &m in members {
        if let Some(ls) = labels.get(ids[m].as_str()) {
            annotated += 1;
            for l in ls {
                *counts.entry((*l).to_owned()).or_default() += 1;
            }
        }
    }
    let annotated_fraction = annotated as f64 / members.len() as f64;
    let top = counts
        .iter()
        .fold(None::<(&String, usize)>, |best, (l, &n)| match best {
            Some((_, b)) if b >= n => best,
            _ => Some((l, n)),
        });
    let majority = top.map(|(l, _)| l.clone());
    let homogeneity = top.map(|(_, n)| n as f64 / annotated as f64);
    let color = match (&majority, homogeneity) {
        (Some(l), Some(h)) if annotated_fraction > MIN_ANNOTATED && h > MIN_MAJORITY => Some(l.clone()),
        _ => None,
    };
    LabelSummary {
        annotated,
        annotated_fraction,
        counts,
        majority,
        homogeneity,
        color,
    }
}

/// Flows between adjacent retained scales and per-community label summaries
/// for every annotation dimension.
pub fn export_alluvial(
    sweep: &ScaleSweepResult,
    ids: &[String],
    annotations: Option<&AnnotationTable>,
) -> Result<AlluvialExport> {
    let selected: Vec<_> = sweep.selected().collect();
    if selected.len() < 2 {
        return Err(Error::NothingToExport);
    }
    if let Some(s) = selected.iter().find(|s| s.best.len() != ids.len()) {
        return Err(Error::InconsistentPartition(format!(
            "scale {} covers {} nodes, {} ids given",
            s.index,
            s.best.len(),
            ids.len()
        )));
    }
    let dims: Vec<(String, BTreeMap<&str, Vec<&str>>)> = annotations
        .map(|a| {
            a.dimensions()
                .into_iter()
                .map(|d| {
                    let per: BTreeMap<&str, Vec<&str>> = a
                        .labels_on(d)
                        .into_iter()
                        .map(|(inf, ls)| (inf, ls.into_iter().collect()))
                        .collect();
                    (d.to_owned(), per)
                })
                .collect()
        })
        .unwrap_or_default();

    let levels = selected
        .iter()
        .enumerate()
        .map(|(level, s)| AlluvialLevel {
            level,
            scale: s.index,
            markov_time: s.markov_time,
            communities: s
                .best
                .communities()
                .iter()
                .enumerate()
                .map(|(c, members)| AlluvialCommunity {
                    community: c,
                    size: members.len(),
                    labels: dims
                        .iter()
                        .map(|(d, per)| (d.clone(), summarize(members, ids, per)))
                        .collect(),
                })
                .collect(),
        })
        .collect();

    let mut flows = Vec::new();
    for (level, pair) in selected.windows(2).enumerate() {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for u in 0..ids.len() {
            *counts
                .entry((pair[0].best.community_of(u), pair[1].best.community_of(u)))
                .or_default() += 1;
        }
        flows.extend(counts.into_iter().map(|((from, to), count)| AlluvialFlow {
            from_level: level,
            from,
            to,
            count,
        }));
    }
    Ok(AlluvialExport { levels, flows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(records: &[(&'static str, &'static str)]) -> BTreeMap<&'static str, Vec<&'static str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for &(i, l) in records {
            out.entry(i).or_default().push(l);
        }
        out
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i}")).collect()
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn colored_when_annotated_and_homogeneous() {
        // 25 members, 10 annotated, 6 of them Left
        let l = labels(&[
            ("i0", "Left"),
            ("i1", "Left"),
            ("i2", "Left"),
            ("i3", "Left"),
            ("i4", "Left"),
            ("i5", "Left"),
            ("i6", "Right"),
            ("i7", "Right"),
            ("i8", "Center"),
            ("i9", "Center"),
        ]);
        let s = summarize(&all(25), &ids(25), &l);
        assert_eq!(s.annotated_fraction, 0.4);
        assert_eq!(s.color.as_deref(), Some("Left"));
        assert!((s.homogeneity.unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sparse_annotation_stays_uncolored() {
        let l = labels(&[("i0", "Left"), ("i1", "Left")]);
        let s = summarize(&all(10), &ids(10), &l);
        assert_eq!(s.annotated_fraction, 0.2);
        assert_eq!(s.majority.as_deref(), Some("Left"));
        assert_eq!(s.color, None);
    }

    #[test]
    fn thresholds_are_strict() {
        let l = labels(&[("i0", "Left"), ("i1", "Right"), ("i2", "Left"), ("i3", "Center")]);
        let s = summarize(&all(5), &ids(5), &l);
        assert_eq!(s.homogeneity, Some(0.5));
        assert_eq!(s.color, None);
        let l = labels(&[("i0", "Left"), ("i1", "Left"), ("i2", "Left")]);
        let s = summarize(&all(10), &ids(10), &l);
        assert_eq!(s.annotated_fraction, 0.3);
        assert_eq!(s.color, None);
    }

    #[test]
    fn ties_go_to_the_earlier_label() {
        let l = labels(&[("i0", "Right"), ("i1", "Left")]);
        assert_eq!(summarize(&all(2), &ids(2), &l).majority.as_deref(), Some("Left"));
    }
}
