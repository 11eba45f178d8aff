//! Observation model: data, priors, packed parameter layout and the joint
//! log posterior with its analytic gradient.

mod data;
mod init;
mod params;
mod posterior;
mod spec;

pub use data::{daily_dates, Covariate, Dataset, SiteGroup};
pub use init::initial_position;
pub use params::{Layout, ParameterSet, ParameterValues};
pub use posterior::{complete_data, conditional_mean, conditional_variance, Model};
pub use spec::{default_roles, BetaPrior, CovariateRole, ModelSpec, PriorConfig, TruncNormalPrior, Variant};
