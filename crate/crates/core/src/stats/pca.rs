use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::SurveyTable;
use crate::error::{Error, Result};

/// Survey variables reduced together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableGroup {
    pub name: String,
    pub members: Vec<String>,
    /// Cumulative explained-variance share the retained components must reach.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Sub-dimension (`PC1`, `PC2`, ...) → representative variable.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

fn default_threshold() -> f64 {
    0.7
}

impl VariableGroup {
    pub fn new(name: impl Into<String>, members: Vec<String>) -> Self {
        VariableGroup {
            name: name.into(),
            members,
            threshold: default_threshold(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::ConfigError(format!("group `{}` has no members", self.name)));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::ConfigError(format!(
                "group `{}`: threshold must lie in (0, 1]",
                self.name
            )));
        }
        if let Some((k, v)) = self.overrides.iter().find(|(_, v)| !self.members.contains(v)) {
            return Err(Error::ConfigError(format!(
                "group `{}`: override {k} names `{v}`, which is not a member",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubDimension {
    /// `PC1`, `PC2`, ... in order of explained variance.
    pub name: String,
    pub representative: String,
    /// Variables whose largest absolute loading falls on this component.
    pub members: Vec<String>,
    /// Loadings of every group member on this component, in member order.
    pub loadings: Vec<f64>,
    pub explained_variance: f64,
}

/// Principal components of the standardized group columns (complete cases).
///
/// Keeps the fewest components reaching the variance threshold, assigns each
/// variable to the retained component with its largest absolute loading, and
/// picks the highest-loading variable of every non-empty cluster, earlier
/// columns winning ties, unless an override names the representative.
pub fn pca_reduce(table: &SurveyTable, group: &VariableGroup) -> Result<Vec<SubDimension>> {
    group.validate()?;
    let cols: Vec<usize> = group
        .members
        .iter()
        .map(|m| {
            table
                .column_index(m)
                .ok_or_else(|| Error::SchemaError(format!("survey has no column `{m}`")))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| cols.iter().map(|&j| r[j]).collect::<Vec<f64>>())
        .filter(|r| r.iter().all(|x| x.is_finite()))
        .collect();
    let dropped = table.rows.len() - rows.len();
    if dropped > 0 {
        log::info!("group `{}`: dropped {dropped} incomplete rows", group.name);
    }
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "group `{}` has {} complete rows",
            group.name,
            rows.len()
        )));
    }
    let (n, p) = (rows.len(), cols.len());
    let mut z = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    for j in 0..p {
        let mean = z.column(j).mean();
        let var = z.column(j).iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var <= f64::EPSILON * mean.abs().max(1.0) {
            return Err(Error::DegenerateVariable(group.members[j].clone()));
        }
        let sd = var.sqrt();
        z.column_mut(j).apply(|x| *x = (*x - mean) / sd);
    }
    let corr = z.transpose() * &z / (n - 1) as f64;
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();

    let mut retained = Vec::new();
    let mut cumulative = 0.0;
    for &k in &order {
        let lambda = eig.eigenvalues[k].max(0.0);
        let mut loadings: Vec<f64> = eig.eigenvectors.column(k).iter().map(|v| v * lambda.sqrt()).collect();
        // fix the sign so the largest loading is positive
        let pivot = (0..p)
            .max_by(|&a, &b| loadings[a].abs().total_cmp(&loadings[b].abs()).then(b.cmp(&a)))
            .unwrap();
        if loadings[pivot] < 0.0 {
            loadings.iter_mut().for_each(|l| *l = -*l);
        }
        retained.push((lambda / total, loadings));
        cumulative += lambda / total;
        if cumulative >= group.threshold - 1e-12 {
            break;
        }
    }

    const TIE: f64 = 1e-9;
    let mut clusters = vec![Vec::new(); retained.len()];
    for j in 0..p {
        let mut best = 0;
        for c in 1..retained.len() {
            if retained[c].1[j].abs() > retained[best].1[j].abs() + TIE {
                best = c;
            }
        }
        clusters[best].push(j);
    }

    let mut out = Vec::new();
    for (c, (share, loadings)) in retained.into_iter().enumerate() {
        if clusters[c].is_empty() {
            continue;
        }
        let name = format!("PC{}", c + 1);
        let representative = match group.overrides.get(&name) {
            Some(v) => v.clone(),
            None => {
                let mut best = clusters[c][0];
                for &j in &clusters[c][1..] {
                    if loadings[j].abs() > loadings[best].abs() + TIE {
                        best = j;
                    }
                }
                group.members[best].clone()
            }
        };
        out.push(SubDimension {
            name,
            representative,
            members: clusters[c].iter().map(|&j| group.members[j].clone()).collect(),
            loadings,
            explained_variance: share,
        });
    }
    Ok(out)
}
