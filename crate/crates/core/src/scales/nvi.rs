use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Joint community counts of two partitions over the same node set.
pub(crate) struct Contingency {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub cells: Vec<usize>,
}

impl Contingency {
    pub fn new(p: &Partition, q: &Partition) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::InconsistentPartition(format!(
                "partitions cover {} and {} nodes",
                p.len(),
                q.len()
            )));
        }
        let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
        for i in 0..p.len() {
            *joint.entry((p.community_of(i), q.community_of(i))).or_default() += 1;
        }
        let mut cells: Vec<_> = joint.into_iter().collect();
        cells.sort_unstable();
        Ok(Contingency {
            n: p.len(),
            rows: p.sizes(),
            cols: q.sizes(),
            cells: cells.into_iter().map(|(_, c)| c).collect(),
        })
    }

    pub fn entropy_rows(&self) -> f64 {
        entropy(&self.rows, self.n)
    }

    pub fn entropy_cols(&self) -> f64 {
        entropy(&self.cols, self.n)
    }

    pub fn entropy_joint(&self) -> f64 {
        entropy(&self.cells, self.n)
    }
}

pub(crate) fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Variation of information normalised by the joint entropy, in `[0, 1]`.
///
/// Two identical single-community partitions have zero joint entropy; that
/// case is defined as 0.
pub fn nvi(p: &Partition, q: &Partition) -> Result<f64> {
    let table = Contingency::new(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    let joint = table.entropy_joint();
    if joint <= 0.0 {
        return Ok(0.0);
    }
    let vi = 2.0 * joint - table.entropy_rows() - table.entropy_cols();
    Ok((vi / joint).clamp(0.0, 1.0))
}
