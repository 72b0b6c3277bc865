use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::glm::{
    fit_family, maximize, report_from_fit, subset, BicStep, CoefficientDelta, Design, FailedFit, Family,
    RegressionReport, Sensitivity,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub family: Family,
    pub response: String,
    pub candidates: Vec<String>,
    #[serde(default = "yes")]
    pub bic_selection: bool,
}

fn yes() -> bool {
    true
}

/// Complete-case regression rows: response plus candidate predictor columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionData {
    pub ids: Vec<String>,
    pub response: Vec<f64>,
    pub columns: Vec<String>,
    /// Row-major predictor values, `columns.len()` per row.
    pub values: Vec<Vec<f64>>,
}

impl RegressionData {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Intercept plus the named predictors.
    pub fn design(&self, predictors: &[String]) -> Result<Design> {
        let cols = predictors
            .iter()
            .map(|name| {
                let j = self
                    .columns
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::SchemaError(format!("no predictor column `{name}`")))?;
                Ok((name.clone(), self.values.iter().map(|r| r[j]).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Design::with_intercept(self.len(), &cols))
    }
}

fn fit_report(family: Family, response: &str, data: &RegressionData, predictors: &[String]) -> Result<RegressionReport> {
    let design = data.design(predictors)?;
    let fit = fit_family(family, &data.response, &design)?;
    Ok(report_from_fit(family, response, &data.ids, &data.response, &design, &fit))
}

/// Greedy forward selection on BIC = −2ℓ + k ln n, starting from the
/// intercept-only model and stopping when no candidate lowers BIC.
///
/// Candidates within a step are fitted in parallel; the winner is the lowest
/// BIC with ties going to the earlier candidate. Failed fits are recorded and
/// skipped. With selection disabled all candidates are fitted at once.
pub fn bic_forward(spec: &RegressionSpec, data: &RegressionData) -> Result<RegressionReport> {
    if spec.candidates.is_empty() {
        return Err(Error::ConfigError("no candidate predictors".into()));
    }
    if !spec.bic_selection {
        let mut report = fit_report(spec.family, &spec.response, data, &spec.candidates)?;
        report.bic_trace = vec![BicStep {
            step: 0,
            added: None,
            bic: report.bic,
            log_likelihood: report.log_likelihood,
        }];
        return Ok(report);
    }

    let mut failed = Vec::new();
    let mut current = match fit_report(spec.family, &spec.response, data, &[]) {
        Ok(r) => r,
        Err(e) => {
            log::error!("intercept-only {} model failed: {e}", spec.response);
            return Err(Error::NoFeasibleModel);
        }
    };
    let mut trace = vec![BicStep {
        step: 0,
        added: None,
        bic: current.bic,
        log_likelihood: current.log_likelihood,
    }];
    let mut selected: Vec<String> = Vec::new();
    loop {
        let step = selected.len() + 1;
        let remaining: Vec<&String> = spec.candidates.iter().filter(|c| !selected.contains(c)).collect();
        if remaining.is_empty() {
            break;
        }
        let fits: Vec<(String, Result<RegressionReport>)> = remaining
            .par_iter()
            .map(|&c| {
                let mut preds = selected.clone();
                preds.push(c.clone());
                (c.clone(), fit_report(spec.family, &spec.response, data, &preds))
            })
            .collect();
        let mut best: Option<(String, RegressionReport)> = None;
        for (c, fit) in fits {
            match fit {
                Ok(r) => {
                    if best.as_ref().is_none_or(|(_, b)| r.bic < b.bic) {
                        best = Some((c, r));
                    }
                }
                Err(e) => failed.push(FailedFit {
                    step,
                    candidate: c,
                    error: e.to_string(),
                }),
            }
        }
        match best {
            Some((c, r)) if r.bic < current.bic => {
                trace.push(BicStep {
                    step,
                    added: Some(c.clone()),
                    bic: r.bic,
                    log_likelihood: r.log_likelihood,
                });
                selected.push(c);
                current = r;
            }
            _ => break,
        }
    }
    current.bic_trace = trace;
    current.failed_candidates = failed;
    Ok(current)
}

/// Refits `report` without rows whose standardized residual exceeds
/// `threshold` in absolute value and reports coefficient changes.
///
/// Returns `report` unchanged when nothing is flagged. A rerun that fails to
/// converge yields a report with `converged = false` and its best estimates.
pub fn sensitivity_rerun(report: &RegressionReport, data: &RegressionData, threshold: f64) -> Result<RegressionReport> {
    if !report.converged {
        return Err(Error::ConfigError("sensitivity rerun needs a converged base fit".into()));
    }
    if report.row_ids != data.ids {
        return Err(Error::InconsistentPartition(
            "regression data does not match the report rows".into(),
        ));
    }
    let keep: Vec<bool> = report.residuals.iter().map(|r| r.abs() <= threshold).collect();
    let removed: Vec<String> = data
        .ids
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| !k)
        .map(|(id, _)| id.clone())
        .collect();
    if removed.is_empty() {
        return Ok(report.clone());
    }
    if removed.len() == data.len() {
        return Err(Error::NoData);
    }
    let design = data.design(&report.predictors)?;
    let (y, design, ids) = subset(&data.response, &design, &data.ids, &keep);
    let mut rerun = match fit_family(report.family, &y, &design) {
        Ok(fit) => report_from_fit(report.family, &report.response, &ids, &y, &design, &fit),
        Err(Error::NotConverged { .. }) => {
            let fit = maximize(report.family, &y, &design);
            report_from_fit(report.family, &report.response, &ids, &y, &design, &fit)
        }
        Err(e) => return Err(e),
    };
    log::info!(
        "{}: removed {} outlier rows, rerun converged = {}",
        report.response,
        removed.len(),
        rerun.converged
    );
    let deltas = report
        .coefficients
        .iter()
        .zip(&rerun.coefficients)
        .map(|(a, b)| CoefficientDelta {
            name: a.name.clone(),
            before: a.estimate,
            after: b.estimate,
            delta: b.estimate - a.estimate,
            sign_stable: a.estimate.signum() == b.estimate.signum(),
        })
        .collect();
    rerun.bic_trace = report.bic_trace.clone();
    rerun.sensitivity = Some(Sensitivity {
        threshold,
        removed,
        rerun_converged: rerun.converged,
        deltas,
    });
    Ok(rerun)
}
