//! Regression stage: PCA reduction of survey variable groups, the unit
//! interval transform, zero-truncated negative binomial and beta regression,
//! BIC forward selection, two-sample KS test and outlier sensitivity reruns.

mod glm;
mod pca;
mod select;
mod survey;
mod transform;

pub use glm::{
    fit_beta, fit_ztnb, gradient, log_likelihood, numeric_hessian, BicStep, Coefficient, CoefficientDelta, Design,
    FailedFit, Family, RegressionReport, Sensitivity, INTERCEPT,
};
pub use pca::{pca_reduce, SubDimension, VariableGroup};
pub use select::{bic_forward, sensitivity_rerun, RegressionData, RegressionSpec};
pub use survey::SurveyTable;
pub use transform::{ks_two_sample, unit_interval_transform, KsResult};
