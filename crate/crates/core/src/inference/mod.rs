//! Diagnostics, information criteria, summaries and predictive checks over
//! posterior draws. Works in `f64`.

mod criteria;
mod diagnostics;
mod predictive;
mod report;
mod spectral;
mod summary;

pub use criteria::{gpd_fit, loo_ic, loo_ic_with, psis_smooth, waic, Loo, Smoothing, Waic, PARETO_K_BAD};
pub use diagnostics::{ess, split_rhat};
pub use predictive::{
    forecast_from_params, likelihood_points, one_step_forecast, parameter_sets, pointwise_loglik, predictive_coverage, ForecastCell,
    LikPoint, MIN_PREDICTIVE_SAMPLES,
};
pub use report::{build_report, FitReport, ParameterReport, SamplerReport};
pub use spectral::spectral_radius;
pub use summary::{posterior_mean, quantile_sorted, summarize, summarize_parameter, Summary};
