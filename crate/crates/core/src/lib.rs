//! Bayesian vector autoregressive models with conditionally heteroskedastic
//! errors for multi-site environmental sensor series.
//!
//! Four variants share one parametric family:
//!
//! * `ARCH`: diagonal autoregression on the latent effect, variance driven by
//!   the squared lagged observation.
//! * `VAR_IW`: full autoregression matrix, fixed covariance with an
//!   inverse-Wishart prior.
//! * `VARCH`: full autoregression matrix with the ARCH variance.
//! * `VARICH`: the autoregression acts on first differences of the latent
//!   effect, with the ARCH variance.
//!
//! Missing observations are imputed as parameters. Posterior sampling uses a
//! no-U-turn Hamiltonian sampler over an unconstrained parameter vector; the
//! [`inference`] module turns draws into diagnostics, information criteria,
//! summaries and one-step forecasts.
//!
//! The numerical core ([`stats`], [`model`], [`sampler`]) is generic over the
//! floating point type through [`Real`]; the aliases below fix it to `f64` or
//! `f32`. Reporting, simulation and ingestion work in `f64`.

pub mod error;
pub mod inference;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat64 = stats::Mat<f64>;
pub type Mat32 = stats::Mat<f32>;
pub type SpdMatrix64 = stats::SpdMatrix<f64>;
pub type SpdMatrix32 = stats::SpdMatrix<f32>;
pub type Dataset64 = model::Dataset<f64>;
pub type Dataset32 = model::Dataset<f32>;
pub type ParameterSet64 = model::ParameterSet<f64>;
pub type ParameterSet32 = model::ParameterSet<f32>;
pub type Model64 = model::Model<f64>;
pub type Model32 = model::Model<f32>;
pub type PosteriorDraws64 = sampler::PosteriorDraws<f64>;
pub type PosteriorDraws32 = sampler::PosteriorDraws<f32>;
