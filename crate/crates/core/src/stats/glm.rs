//! Zero-truncated negative binomial (log link) and beta (logit link)
//! regression by maximum likelihood.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(Intercept)";
const MAX_ITERATIONS: u64 = 500;
const GRADIENT_TOL: f64 = 1e-6;
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(alias = "ztnb", alias = "posnegbinomial")]
    ZeroTruncatedNegBinomial,
    #[serde(alias = "beta")]
    BetaLogit,
}

impl Family {
    fn dispersion_name(self) -> &'static str {
        match self {
            Family::ZeroTruncatedNegBinomial => "theta",
            Family::BetaLogit => "phi",
        }
    }

    pub fn check_response(self, y: &[f64]) -> Result<()> {
        for &v in y {
            let ok = match self {
                Family::ZeroTruncatedNegBinomial => v.is_finite() && v >= 1.0 && v.fract() == 0.0,
                Family::BetaLogit => v > 0.0 && v < 1.0,
            };
            if !ok {
                return Err(Error::InvalidResponse(match self {
                    Family::ZeroTruncatedNegBinomial => format!("{v} is not an integer ≥ 1"),
                    Family::BetaLogit => format!("{v} is not strictly inside (0, 1)"),
                }));
            }
        }
        Ok(())
    }
}

/// Model matrix with named columns; the first column is usually the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl Design {
    /// Intercept followed by `columns` (each of length `n`).
    pub fn with_intercept(n: usize, columns: &[(String, Vec<f64>)]) -> Self {
        let names = std::iter::once(INTERCEPT.to_owned())
            .chain(columns.iter().map(|(name, _)| name.clone()))
            .collect();
        let x = DMatrix::from_fn(n, columns.len() + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1].1[i] });
        Design { names, x }
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn rank(&self) -> usize {
        let sv = self.x.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let tol = max * self.nrows().max(self.ncols()) as f64 * f64::EPSILON * 10.0;
        sv.iter().filter(|&&s| s > tol).count()
    }

    fn select_rows(&self, keep: &[bool]) -> Design {
        let rows: Vec<usize> = (0..self.nrows()).filter(|&i| keep[i]).collect();
        Design {
            names: self.names.clone(),
            x: self.x.select_rows(rows.iter()),
        }
    }
}

fn ln_1m_exp(a: f64) -> f64 {
    // ln(1 − e^a) for a < 0
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// Per-observation log-likelihood and its derivatives with respect to the
/// linear predictor `eta` and the log dispersion.
fn observation(family: Family, y: f64, eta: f64, log_disp: f64) -> (f64, f64, f64) {
    match family {
        Family::ZeroTruncatedNegBinomial => {
            let mu = eta.exp();
            let theta = log_disp.exp();
            let tm = theta + mu;
            let ln_ratio = theta.ln() - tm.ln();
            let ln_p0 = theta * ln_ratio;
            let nb = ln_gamma(y + theta) - ln_gamma(theta) - ln_gamma(y + 1.0) + ln_p0 + y * (mu.ln() - tm.ln());
            let ll = nb - ln_1m_exp(ln_p0);
            let odds0 = 1.0 / (-ln_p0).exp_m1();
            let d_eta = theta * (y - mu) / tm - odds0 * theta * mu / tm;
            let d_theta = digamma(y + theta) - digamma(theta) + ln_ratio + (mu - y) / tm
                + odds0 * (ln_ratio + mu / tm);
            (ll, d_eta, d_theta * theta)
        }
        Family::BetaLogit => {
            let mu = 1.0 / (1.0 + (-eta).exp());
            let phi = log_disp.exp();
            let (a, b) = (mu * phi, (1.0 - mu) * phi);
            if a.min(b) >= STIRLING_MIN {
                return beta_stirling(y, eta, phi);
            }
            let (ly, l1y) = (y.ln(), (1.0 - y).ln());
            let ll = ln_gamma(phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y;
            let ystar = ly - l1y;
            let mustar = digamma(a) - digamma(b);
            let d_eta = phi * (ystar - mustar) * mu * (1.0 - mu);
            let d_phi = mu * (ystar - mustar) + l1y - digamma(b) + digamma(phi);
            (ll, d_eta, d_phi * phi)
        }
    }
}

const STIRLING_MIN: f64 = 10.0;

/// Remainder of Stirling's series, ln Γ(x) − (x − ½)ln x + x − ½ln 2π, and its derivative.
fn stirling_remainder(x: f64) -> (f64, f64) {
    let r = 1.0 / (x * x);
    let d = (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r * (1.0 / 1680.0 - r / 1188.0)))) / x;
    let dd = -r * (1.0 / 12.0 - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r / 132.0))));
    (d, dd)
}

/// Beta observation for large shapes. Expanding every ln Γ cancels the
/// φ ln φ terms analytically; what remains is of the size of ℓ itself, so
/// the result keeps full precision where the ln Γ form loses ~ε·φ ln φ.
fn beta_stirling(y: f64, eta: f64, phi: f64) -> (f64, f64, f64) {
    let mu = 1.0 / (1.0 + (-eta).exp());
    let nu = 1.0 / (1.0 + eta.exp());
    let (a, b) = (mu * phi, nu * phi);
    let (ly, l1y) = (y.ln(), (-y).ln_1p());
    let d = y - mu;
    let (l1, l2) = ((d / mu).ln_1p(), (-d / nu).ln_1p());
    let (rp, rp1) = stirling_remainder(phi);
    let (ra, ra1) = stirling_remainder(a);
    let (rb, rb1) = stirling_remainder(b);
    let ll = a * l1 + b * l2 - ly - l1y + 0.5 * (phi * mu * nu / std::f64::consts::TAU).ln() + rp - ra - rb;
    let d_mu = phi * (l1 - l2) + 0.5 * (nu - mu) / (mu * nu) - phi * (ra1 - rb1);
    let d_log_phi = phi * (mu * l1 + nu * l2) + 0.5 + phi * rp1 - a * ra1 - b * rb1;
    (ll, d_mu * mu * nu, d_log_phi)
}

/// Total log-likelihood at `params = (β, log dispersion)`.
pub fn log_likelihood(family: Family, y: &[f64], design: &Design, params: &[f64]) -> f64 {
    let p = design.ncols();
    let beta = DVector::from_column_slice(&params[..p]);
    let eta = &design.x * beta;
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| observation(family, yi, e, params[p]).0)
        .sum()
}

/// Analytic gradient of [`log_likelihood`].
pub fn gradient(family: Family, y: &[f64], design: &Design, params: &[f64]) -> Vec<f64> {
    let p = design.ncols();
    let beta = DVector::from_column_slice(&params[..p]);
    let eta = &design.x * beta;
    let mut d_eta = DVector::zeros(y.len());
    let mut d_disp = 0.0;
    for (i, (&yi, &e)) in y.iter().zip(eta.iter()).enumerate() {
        let (_, de, dd) = observation(family, yi, e, params[p]);
        d_eta[i] = de;
        d_disp += dd;
    }
    let mut g: Vec<f64> = (design.x.transpose() * d_eta).iter().copied().collect();
    g.push(d_disp);
    g
}

/// Hessian of the log-likelihood by central differences of the analytic gradient.
pub fn numeric_hessian(family: Family, y: &[f64], design: &Design, params: &[f64]) -> DMatrix<f64> {
    let k = params.len();
    let mut h = DMatrix::zeros(k, k);
    let mut x = params.to_vec();
    for j in 0..k {
        let step = 1e-5 * params[j].abs().max(1.0);
        x[j] = params[j] + step;
        let up = gradient(family, y, design, &x);
        x[j] = params[j] - step;
        let down = gradient(family, y, design, &x);
        x[j] = params[j];
        for i in 0..k {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

struct NegLogLik<'a> {
    family: Family,
    y: &'a [f64],
    design: &'a Design,
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let v = -log_likelihood(self.family, self.y, self.design, p);
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

impl Gradient for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(gradient(self.family, self.y, self.design, p).into_iter().map(|g| -g).collect())
    }
}

/// Raw optimizer outcome, converged or not.
#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
    pub trace: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Log dispersion past which the fit is taken to sit at the dispersion limit:
/// θ → ∞ is the truncated Poisson, φ → ∞ a point mass at the mean.
fn log_dispersion_cap(family: Family) -> f64 {
    match family {
        Family::ZeroTruncatedNegBinomial => 12.0,
        Family::BetaLogit => 18.0,
    }
}

/// Score vanishes, except for a dispersion score that only pushes further past the cap.
fn stationary(family: Family, x: &[f64], g: &[f64]) -> bool {
    let k = g.len();
    max_abs(&g[..k - 1]) < GRADIENT_TOL
        && (g[k - 1].abs() < GRADIENT_TOL || x[k - 1] > log_dispersion_cap(family))
}

/// Parameters the Newton polish moves: all of them, or only the coefficients
/// once the dispersion has passed its cap.
fn free_params(family: Family, x: &[f64]) -> usize {
    let k = x.len();
    if x[k - 1] > log_dispersion_cap(family) {
        k - 1
    } else {
        k
    }
}

/// Negative Hessian and score restricted to the free parameters.
fn newton_system(family: Family, y: &[f64], design: &Design, x: &[f64], g: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let a = free_params(family, x);
    let neg_h = -numeric_hessian(family, y, design, x);
    (neg_h.view((0, 0), (a, a)).into_owned(), DVector::from_column_slice(&g[..a]))
}

/// The Newton step would raise ℓ by less than ℓ itself can resolve, as
/// happens for nearly constant responses whose dispersion runs to ~1e6.
fn below_resolution(neg_h: &DMatrix<f64>, gv: &DVector<f64>, ll: f64) -> bool {
    neg_h
        .clone()
        .cholesky()
        .is_some_and(|c| gv.dot(&c.solve(gv)) / 2.0 <= 4.0 * f64::EPSILON * ll.abs().max(1.0))
}

fn within_resolution(family: Family, y: &[f64], design: &Design, x: &[f64], g: &[f64], ll: f64) -> bool {
    let (neg_h, gv) = newton_system(family, y, design, x, g);
    below_resolution(&neg_h, &gv, ll)
}

fn start(family: Family, y: &[f64], p: usize) -> Vec<f64> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut x = vec![0.0; p + 1];
    match family {
        Family::ZeroTruncatedNegBinomial => {
            x[0] = (mean - 0.5).max(1e-3).ln();
        }
        Family::BetaLogit => {
            x[0] = (mean / (1.0 - mean)).ln();
            let phi = if var > 0.0 { mean * (1.0 - mean) / var - 1.0 } else { 100.0 };
            x[p] = phi.clamp(0.5, 1e4).ln();
        }
    }
    x
}

/// Quasi-Newton run followed by damped Newton polishing on the numeric Hessian.
pub(crate) fn maximize(family: Family, y: &[f64], design: &Design) -> Fit {
    let n = y.len() as f64;
    let k = design.ncols() + 1;
    let problem = NegLogLik { family, y, design };
    let x0 = start(family, y, design.ncols());
    // observed information at the start when it is positive definite, else a scaled identity
    let info = -numeric_hessian(family, y, design, &x0);
    let inv_h = match info.clone().cholesky().filter(|_| info.iter().all(|v| v.is_finite())) {
        Some(c) => {
            let inv = c.inverse();
            (0..k).map(|i| (0..k).map(|j| inv[(i, j)]).collect()).collect()
        }
        None => (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 / n } else { 0.0 }).collect())
            .collect::<Vec<Vec<f64>>>(),
    };
    let line_search = MoreThuenteLineSearch::new()
        .with_bounds(f64::EPSILON.sqrt(), 10.0)
        .expect("valid step bounds");
    let solver = BFGS::new(line_search)
        .with_tolerance_grad(GRADIENT_TOL)
        .expect("positive tolerance")
        .with_tolerance_cost(f64::EPSILON)
        .expect("non-negative tolerance");
    let (mut x, mut iterations) = match Executor::new(problem, solver)
        .configure(|s| s.param(x0.clone()).inv_hessian(inv_h).max_iters(MAX_ITERATIONS))
        .run()
    {
        Ok(res) => {
            let st = res.state();
            (
                st.get_best_param().cloned().unwrap_or(x0),
                st.get_iter() as usize,
            )
        }
        Err(e) => {
            log::debug!("quasi-Newton stage stopped: {e}");
            (x0, 0)
        }
    };

    let mut ll = log_likelihood(family, y, design, &x);
    let mut trace = vec![ll];
    let mut g = gradient(family, y, design, &x);
    for _ in 0..100 {
        if stationary(family, &x, &g) {
            break;
        }
        iterations += 1;
        let (neg_h, gv) = newton_system(family, y, design, &x, &g);
        if below_resolution(&neg_h, &gv, ll) {
            break;
        }
        let a = gv.len();
        // tolerated drop in ℓ: its rounding noise grows with the dispersion
        let slack = 1e-10 * ll.abs().max(1.0);
        let mut damping = 0.0;
        let mut improved = false;
        for _ in 0..16 {
            let m = &neg_h + DMatrix::identity(a, a) * damping;
            // only positive-definite systems give an ascent direction
            if let Some(step) = m.cholesky().map(|c| c.solve(&gv)) {
                let mut t = 1.0;
                for _ in 0..40 {
                    let mut trial = x.clone();
                    trial.iter_mut().zip(step.iter()).for_each(|(p, d)| *p += t * d);
                    let trial_ll = log_likelihood(family, y, design, &trial);
                    if trial_ll.is_finite() && trial_ll >= ll - slack {
                        let trial_g = gradient(family, y, design, &trial);
                        if trial_ll > ll || max_abs(&trial_g[..a]) < max_abs(&g[..a]) {
                            x = trial;
                            ll = trial_ll;
                            g = trial_g;
                            improved = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
            }
            if improved {
                break;
            }
            damping = if damping == 0.0 { 1e-6 * n } else { damping * 10.0 };
        }
        trace.push(ll);
        if !improved {
            break;
        }
    }
    let gradient_norm = max_abs(&g);
    let p = design.ncols();
    let degenerate_mean = match family {
        Family::ZeroTruncatedNegBinomial => {
            let eta = &design.x * DVector::from_column_slice(&x[..p]);
            eta.iter().all(|e| e.exp() < 1e-4)
        }
        Family::BetaLogit => false,
    };
    Fit {
        converged: !degenerate_mean
            && (stationary(family, &x, &g) || within_resolution(family, y, design, &x, &g, ll)),
        boundary: degenerate_mean || x[p] > log_dispersion_cap(family),
        params: x,
        log_likelihood: ll,
        gradient_norm,
        iterations,
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Coefficient {
    fn new(name: String, estimate: f64, std_error: f64) -> Self {
        Coefficient {
            name,
            estimate,
            std_error,
            ci_low: estimate - Z_95 * std_error,
            ci_high: estimate + Z_95 * std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicStep {
    pub step: usize,
    /// Predictor added at this step; `None` for the intercept-only model.
    pub added: Option<String>,
    pub bic: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedFit {
    pub step: usize,
    pub candidate: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientDelta {
    pub name: String,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    pub sign_stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivity {
    pub threshold: f64,
    pub removed: Vec<String>,
    pub rerun_converged: bool,
    pub deltas: Vec<CoefficientDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub family: Family,
    pub response: String,
    pub n: usize,
    /// Selected predictors, excluding the intercept.
    pub predictors: Vec<String>,
    pub coefficients: Vec<Coefficient>,
    pub dispersion: Coefficient,
    pub log_likelihood: f64,
    pub bic: f64,
    pub bic_trace: Vec<BicStep>,
    pub converged: bool,
    /// Estimates run off to a parameter-space boundary. A truncated mean of 1
    /// has no MLE and is reported with `converged = false`; an unbounded
    /// dispersion (θ or φ → ∞) can still converge in the coefficients, whose
    /// standard errors then treat the dispersion as fixed.
    pub boundary: bool,
    pub iterations: usize,
    pub row_ids: Vec<String>,
    pub residuals: Vec<f64>,
    pub failed_candidates: Vec<FailedFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Sensitivity>,
}

impl RegressionReport {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

pub(crate) fn bic(log_likelihood: f64, params: usize, n: usize) -> f64 {
    -2.0 * log_likelihood + params as f64 * (n as f64).ln()
}

fn check_design(family: Family, y: &[f64], design: &Design) -> Result<()> {
    family.check_response(y)?;
    if design.nrows() != y.len() {
        return Err(Error::InsufficientData(format!(
            "{} responses for {} design rows",
            y.len(),
            design.nrows()
        )));
    }
    if y.len() < design.ncols() + 2 {
        return Err(Error::InsufficientData(format!(
            "{} observations for {} coefficients",
            y.len(),
            design.ncols()
        )));
    }
    if design.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("design contains non-finite values".into()));
    }
    let rank = design.rank();
    if rank < design.ncols() {
        return Err(Error::RankDeficient {
            rank,
            cols: design.ncols(),
        });
    }
    Ok(())
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0))))
}

fn residuals(family: Family, y: &[f64], design: &Design, params: &[f64]) -> Vec<f64> {
    let p = design.ncols();
    let eta = &design.x * DVector::from_column_slice(&params[..p]);
    let disp = params[p].exp();
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| match family {
            Family::ZeroTruncatedNegBinomial => {
                // Pearson residual under the truncated distribution
                let mu = e.exp();
                let ln_p0 = disp * (disp.ln() - (disp + mu).ln());
                let keep = -ln_p0.exp_m1();
                let mean = mu / keep;
                let var = (mu + mu * mu / disp + mu * mu) / keep - mean * mean;
                (yi - mean) / var.max(f64::MIN_POSITIVE).sqrt()
            }
            Family::BetaLogit => {
                let mu = 1.0 / (1.0 + (-e).exp());
                let (a, b) = (mu * disp, (1.0 - mu) * disp);
                let ystar = (yi / (1.0 - yi)).ln();
                (ystar - (digamma(a) - digamma(b))) / (trigamma(a) + trigamma(b)).sqrt()
            }
        })
        .collect()
}

/// Builds a report from a finished fit; standard errors come from the
/// inverse observed information.
pub(crate) fn report_from_fit(
    family: Family,
    response: &str,
    ids: &[String],
    y: &[f64],
    design: &Design,
    fit: &Fit,
) -> RegressionReport {
    let p = design.ncols();
    let mut info = -numeric_hessian(family, y, design, &fit.params);
    let capped = fit.params[p] > log_dispersion_cap(family);
    if capped {
        // dispersion held at its limit: coefficients from their own block, no dispersion SE
        info = info.view((0, 0), (p, p)).into_owned();
    }
    let cov = info.clone().cholesky().map(|c| c.inverse()).or_else(|| info.try_inverse());
    let se = |j: usize| -> f64 {
        cov.as_ref()
            .map(|c| c[(j, j)])
            .filter(|v| *v > 0.0 && v.is_finite())
            .map_or(f64::NAN, f64::sqrt)
    };
    let coefficients = (0..p)
        .map(|j| Coefficient::new(design.names[j].clone(), fit.params[j], se(j)))
        .collect();
    let disp = fit.params[p].exp();
    let disp_se = if capped { f64::NAN } else { disp * se(p) };
    let dispersion = Coefficient::new(family.dispersion_name().into(), disp, disp_se);
    let boundary = fit.boundary;
    if boundary {
        log::debug!("{response}: estimates at the parameter-space boundary");
    }
    RegressionReport {
        family,
        response: response.to_owned(),
        n: y.len(),
        predictors: design.names.iter().filter(|n| *n != INTERCEPT).cloned().collect(),
        coefficients,
        dispersion,
        log_likelihood: fit.log_likelihood,
        bic: bic(fit.log_likelihood, p + 1, y.len()),
        bic_trace: Vec::new(),
        converged: fit.converged,
        boundary,
        iterations: fit.iterations,
        row_ids: ids.to_vec(),
        residuals: residuals(family, y, design, &fit.params),
        failed_candidates: Vec::new(),
        sensitivity: None,
    }
}

pub(crate) fn fit_family(family: Family, y: &[f64], design: &Design) -> Result<Fit> {
    check_design(family, y, design)?;
    let fit = maximize(family, y, design);
    if !fit.converged && !fit.boundary {
        return Err(Error::NotConverged {
            iterations: fit.iterations,
            gradient_norm: fit.gradient_norm,
            trace: fit.trace,
        });
    }
    Ok(fit)
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Zero-truncated negative binomial regression with a log link.
pub fn fit_ztnb(responses: &[f64], design: &Design) -> Result<RegressionReport> {
    let family = Family::ZeroTruncatedNegBinomial;
    let fit = fit_family(family, responses, design)?;
    Ok(report_from_fit(family, "y", &default_ids(responses.len()), responses, design, &fit))
}

/// Beta regression with a logit mean link and constant precision.
pub fn fit_beta(responses: &[f64], design: &Design) -> Result<RegressionReport> {
    let family = Family::BetaLogit;
    let fit = fit_family(family, responses, design)?;
    Ok(report_from_fit(family, "y", &default_ids(responses.len()), responses, design, &fit))
}

pub(crate) fn subset(y: &[f64], design: &Design, ids: &[String], keep: &[bool]) -> (Vec<f64>, Design, Vec<String>) {
    let y2 = y.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| *v).collect();
    let ids2 = ids.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| v.clone()).collect();
    (y2, design.select_rows(keep), ids2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_beta_matches_log_gamma_form() {
        for &(y, eta, phi) in &[(0.25, -0.8, 40.0), (0.7, 0.3, 25.0), (0.116, -2.03, 3e3)] {
            let mu = 1.0 / (1.0 + f64::exp(-eta));
            let (a, b) = (mu * phi, (1.0 - mu) * phi);
            let direct = ln_gamma(phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * f64::ln(y) + (b - 1.0) * (1.0 - y).ln();
            let mustar = digamma(a) - digamma(b);
            let ystar = (y / (1.0 - y)).ln();
            let d_eta = phi * (ystar - mustar) * mu * (1.0 - mu);
            let d_phi = phi * (mu * (ystar - mustar) + (1.0 - y).ln() - digamma(b) + digamma(phi));
            let (ll, de, dp) = beta_stirling(y, eta, phi);
            assert!((ll - direct).abs() < 1e-10 * direct.abs().max(1.0), "{ll} vs {direct}");
            assert!((de - d_eta).abs() < 1e-8 * d_eta.abs().max(1.0), "{de} vs {d_eta}");
            assert!((dp - d_phi).abs() < 1e-8 * d_phi.abs().max(1.0), "{dp} vs {d_phi}");
        }
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        let h = 1e-5;
        for x in [0.3, 2.0, 17.5] {
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() < 1e-6 * fd);
        }
    }

    #[test]
    fn truncated_mass_matches_untruncated() {
        // P(Y = y | Y ≥ 1)(1 − P0) = P(Y = y)
        for &(mu, theta, y) in &[(0.3, 0.5, 1.0), (4.0, 2.0, 7.0), (50.0, 10.0, 40.0)] {
            let (ll, _, _) = observation(Family::ZeroTruncatedNegBinomial, y, f64::ln(mu), f64::ln(theta));
            let p0: f64 = (theta / (theta + mu)).powf(theta);
            let nb = ln_gamma(y + theta) - ln_gamma(theta) - ln_gamma(y + 1.0)
                + theta * (theta / (theta + mu)).ln()
                + y * (mu / (theta + mu)).ln();
            assert!((ll.exp() * (1.0 - p0) - nb.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn design_rank_and_guards() {
        let d = Design::with_intercept(4, &[("a".into(), vec![1.0, 1.0, 1.0, 1.0])]);
        assert_eq!(d.rank(), 1);
        assert!(matches!(
            fit_beta(&[0.2, 0.4, 0.5, 0.7], &d),
            Err(Error::RankDeficient { rank: 1, cols: 2 })
        ));
        let d = Design::with_intercept(3, &[]);
        assert!(matches!(fit_ztnb(&[1.0, 0.0, 2.0], &d), Err(Error::InvalidResponse(_))));
        assert!(matches!(fit_beta(&[0.2, 1.0, 0.5], &d), Err(Error::InvalidResponse(_))));
    }

    #[test]
    fn constant_ones_hit_the_boundary() {
        let d = Design::with_intercept(30, &[]);
        let r = fit_ztnb(&[1.0; 30], &d).unwrap();
        assert!(r.boundary);
        let mu = r.coefficients[0].estimate.exp();
        assert!(mu < 1e-4, "{mu}");
    }

    #[test]
    fn underdispersed_counts_reach_the_poisson_limit() {
        // variance well below the mean: θ̂ = ∞
        let y: Vec<f64> = (0..200).map(|i| [3.0, 4.0, 4.0, 5.0][i % 4]).collect();
        let r = fit_ztnb(&y, &Design::with_intercept(200, &[])).unwrap();
        assert!(r.converged && r.boundary);
        assert!(r.dispersion.std_error.is_nan());
        assert!(r.coefficients[0].std_error.is_finite());
        // zero-truncated Poisson mean equation λ/(1 − e^−λ) = 4
        let lambda = r.coefficients[0].estimate.exp();
        assert!((lambda / (1.0 - (-lambda).exp()) - 4.0).abs() < 1e-4, "{lambda}");
    }

    #[test]
    fn nearly_constant_proportions_converge() {
        let y: Vec<f64> = (0..200).map(|i| 0.116 + 2e-4 * ((i as f64) * 0.7).sin()).collect();
        let r = fit_beta(&y, &Design::with_intercept(200, &[])).unwrap();
        assert!(r.converged && !r.boundary);
        assert!(r.dispersion.estimate > 1e5);
        let mu = 1.0 / (1.0 + (-r.coefficients[0].estimate).exp());
        assert!((mu - 0.116).abs() < 1e-5);
    }
}
