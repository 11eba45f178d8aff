//! Collected diagnostics for one fit and their file formats.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::criteria::{loo_ic, waic, Loo, Waic};
use super::diagnostics::{ess, split_rhat};
use super::predictive::{one_step_forecast, pointwise_loglik, predictive_coverage, ForecastCell};
use super::spectral::spectral_radius;
use super::summary::{posterior_mean, summarize, Summary};
use crate::error::{Error, Result};
use crate::model::{Model, Variant};
use crate::sampler::PosteriorDraws;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterReport {
    pub name: String,
    /// `None` when the draws have zero variance.
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub divergences: usize,
    pub step_size: Vec<f64>,
    pub mean_accept_stat: Vec<f64>,
    pub mean_tree_depth: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub variant: Variant,
    pub n_chains: usize,
    pub n_kept: usize,
    pub rhat_min: Option<f64>,
    pub rhat_max: Option<f64>,
    pub ess_min: Option<f64>,
    pub parameters: Vec<ParameterReport>,
    pub waic: Waic,
    pub looic: Loo,
    pub coverage: f64,
    /// Posterior mean of `Φ`, row-major rows.
    pub phi_mean: Vec<Vec<f64>>,
    pub spectral_radius: f64,
    /// Absent when the draws were loaded without telemetry.
    pub sampler: Option<SamplerReport>,
    pub forecasts: Vec<ForecastCell>,
}

/// Diagnostics, criteria, summaries, forecasts and coverage for `draws`.
pub fn build_report(draws: &PosteriorDraws, model: &Model, forecast_seed: u64) -> Result<FitReport> {
    if draws.n_kept() == 0 {
        return Err(Error::InsufficientDraws { needed: 1, got: 0 });
    }
    let mut parameters = Vec::with_capacity(draws.n_params());
    for (k, name) in draws.names.iter().enumerate() {
        let chains = draws.chains_of(k);
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        let rhat = match split_rhat(&chains) {
            Ok(r) => Some(r),
            Err(Error::ZeroVariance) | Err(Error::InsufficientDraws { .. }) => None,
            Err(e) => return Err(e),
        };
        let ess = ess(&chains).ok();
        parameters.push(ParameterReport { name: name.clone(), rhat, ess, summary: summarize(&pooled) });
    }
    let fold = |f: fn(f64, f64) -> f64, get: fn(&ParameterReport) -> Option<f64>| parameters.iter().filter_map(get).reduce(f);
    let rhat_min = fold(f64::min, |p| p.rhat);
    let rhat_max = fold(f64::max, |p| p.rhat);
    let ess_min = fold(f64::min, |p| p.ess);

    let loglik = pointwise_loglik(draws, model)?;
    let w = waic(&loglik)?;
    let l = loo_ic(&loglik)?;
    drop(loglik);
    let forecasts = one_step_forecast(draws, model, forecast_seed)?;
    let coverage = predictive_coverage(&forecasts, model.data());
    let mean = model.layout().from_constrained(&posterior_mean(draws))?;
    let phi_mean = (0..mean.phi.rows()).map(|i| mean.phi.row(i).to_vec()).collect();
    let sampler = (!draws.stats.is_empty()).then(|| SamplerReport {
        divergences: draws.total_divergences(),
        step_size: draws.stats.iter().map(|s| s.step_size).collect(),
        mean_accept_stat: draws.stats.iter().map(|s| s.mean_accept_stat).collect(),
        mean_tree_depth: draws.stats.iter().map(|s| s.mean_tree_depth).collect(),
    });
    Ok(FitReport {
        variant: model.spec().variant,
        n_chains: draws.n_chains(),
        n_kept: draws.n_kept(),
        rhat_min,
        rhat_max,
        ess_min,
        parameters,
        waic: w,
        looic: l,
        coverage,
        phi_mean,
        spectral_radius: spectral_radius(&mean.phi),
        sampler,
        forecasts,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl FitReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// `parameter,mean,sd,q2.5,q50,q97.5,rhat,ess`
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "mean", "sd", "q2.5", "q50", "q97.5", "rhat", "ess"])?;
        for p in &self.parameters {
            let s = &p.summary;
            w.write_record([
                p.name.clone(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.q2_5.to_string(),
                s.q50.to_string(),
                s.q97_5.to_string(),
                opt(p.rhat),
                opt(p.ess),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `t,date,s,site,mean,sd,q2.5,q50,q97.5,observed` with 1-based `t` and `s`.
    pub fn write_forecast_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "date", "s", "site", "mean", "sd", "q2.5", "q50", "q97.5", "observed"])?;
        for c in &self.forecasts {
            w.write_record([
                (c.t + 1).to_string(),
                c.date.to_string(),
                (c.site + 1).to_string(),
                c.site_id.clone(),
                c.mean.to_string(),
                c.sd.to_string(),
                c.q2_5.to_string(),
                c.q50.to_string(),
                c.q97_5.to_string(),
                opt(c.observed),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
