//! Pointwise log-likelihood and one-step-ahead predictive distributions.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::summary::{quantile_sorted, summarize};
use crate::error::{Error, Result};
use crate::model::{complete_data, conditional_mean, conditional_variance, Dataset, Model, ParameterSet};
use crate::sampler::PosteriorDraws;
use crate::stats::{self, Mat};

/// Predictive samples per cell are at least this many; each draw is
/// replicated when there are fewer kept draws.
pub const MIN_PREDICTIVE_SAMPLES: usize = 4000;

const TIME_BLOCK: usize = 16;

/// One likelihood point: a single observed cell for diagonal variants, or the
/// observed sub-vector at time `t` for `VAR_IW` (`site == None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikPoint {
    pub t: usize,
    pub site: Option<usize>,
}

/// Parameter sets of every kept draw, pooled in chain order.
pub fn parameter_sets(draws: &PosteriorDraws, model: &Model) -> Result<Vec<ParameterSet>> {
    let names = model.parameter_names();
    if draws.names != names {
        return Err(Error::LengthMismatch { expected: names.len(), actual: draws.names.len() });
    }
    draws.pooled().map(|d| model.layout().from_constrained(d)).collect()
}

pub fn likelihood_points(model: &Model) -> Vec<LikPoint> {
    let data = model.data();
    let t0 = model.spec().variant.first_time();
    let diagonal = model.spec().variant.has_arch_variance();
    let mut out = Vec::new();
    for t in t0..data.n_time() {
        if diagonal {
            out.extend((0..data.n_sites()).filter(|&s| !data.is_missing(t, s)).map(|s| LikPoint { t, site: Some(s) }));
        } else if (0..data.n_sites()).any(|s| !data.is_missing(t, s)) {
            out.push(LikPoint { t, site: None });
        }
    }
    out
}

fn draw_loglik(p: &ParameterSet, model: &Model, points: &[LikPoint]) -> Result<Vec<f64>> {
    let data = model.data();
    let spec = model.spec();
    let y = complete_data(p, data)?;
    let mut out = Vec::with_capacity(points.len());
    let mut cache: Option<(usize, Vec<f64>, stats::SpdMatrix<f64>)> = None;
    for pt in points {
        if cache.as_ref().is_none_or(|c| c.0 != pt.t) {
            let m = conditional_mean(p, spec, &y, data.covariates(), pt.t)?;
            let v = conditional_variance(p, spec, &y, pt.t)?;
            cache = Some((pt.t, m, v));
        }
        let (_, m, v) = cache.as_ref().unwrap();
        let ll = match pt.site {
            Some(s) => stats::normal_logpdf(y[(pt.t, s)], m[s], v.matrix()[(s, s)].sqrt()),
            None => {
                let obs: Vec<usize> = (0..data.n_sites()).filter(|&s| !data.is_missing(pt.t, s)).collect();
                let yo: Vec<f64> = obs.iter().map(|&s| y[(pt.t, s)]).collect();
                let mo: Vec<f64> = obs.iter().map(|&s| m[s]).collect();
                stats::mvn_logpdf(&yo, &mo, &v.submatrix(&obs)?)?
            }
        };
        out.push(ll);
    }
    Ok(out)
}

/// Draws × points log-likelihood matrix over observed data, with points as in
/// [`likelihood_points`]. `VAR_IW` marginalizes missing coordinates through the
/// matching sub-matrix of `Σ`.
pub fn pointwise_loglik(draws: &PosteriorDraws, model: &Model) -> Result<Mat<f64>> {
    let params = parameter_sets(draws, model)?;
    let points = likelihood_points(model);
    let rows = params.par_iter().map(|p| draw_loglik(p, model, &points)).collect::<Result<Vec<_>>>()?;
    Mat::from_vec(rows.len(), points.len(), rows.into_iter().flatten().collect())
}

/// Predictive distribution of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastCell {
    pub t: usize,
    pub date: NaiveDate,
    pub site: usize,
    pub site_id: String,
    /// Posterior mean of the conditional mean `M_t`.
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
    pub observed: Option<f64>,
}

/// One-step-ahead predictive distributions for every `t ≥ t₀` and site.
///
/// Each kept draw gives `M_t` and `Σ_t` from its completed data and
/// contributes predictive samples from `MVN(M_t, Σ_t)`. Deterministic in `seed`.
pub fn one_step_forecast(draws: &PosteriorDraws, model: &Model, seed: u64) -> Result<Vec<ForecastCell>> {
    let params = parameter_sets(draws, model)?;
    if params.is_empty() {
        return Err(Error::InsufficientDraws { needed: 1, got: 0 });
    }
    forecast_from_params(&params, model, seed)
}

pub fn forecast_from_params(params: &[ParameterSet], model: &Model, seed: u64) -> Result<Vec<ForecastCell>> {
    let data = model.data();
    let spec = model.spec();
    let n_s = data.n_sites();
    let t0 = spec.variant.first_time();
    let reps = MIN_PREDICTIVE_SAMPLES.div_ceil(params.len()).max(1);
    let blocks: Vec<(usize, usize)> = (t0..data.n_time()).step_by(TIME_BLOCK).map(|a| (a, (a + TIME_BLOCK).min(data.n_time()))).collect();
    let out = blocks
        .par_iter()
        .enumerate()
        .map(|(b, &(start, end))| -> Result<Vec<ForecastCell>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n_cells = (end - start) * n_s;
            let mut samples = vec![Vec::with_capacity(params.len() * reps); n_cells];
            let mut mean_acc = vec![0.0; n_cells];
            let mut z = vec![0.0; n_s];
            for p in params {
                let y = complete_data(p, data)?;
                for t in start..end {
                    let m = conditional_mean(p, spec, &y, data.covariates(), t)?;
                    let v = conditional_variance(p, spec, &y, t)?;
                    let l = v.factor().matrix();
                    for s in 0..n_s {
                        mean_acc[(t - start) * n_s + s] += m[s];
                    }
                    for _ in 0..reps {
                        for zi in z.iter_mut() {
                            *zi = StandardNormal.sample(&mut rng);
                        }
                        for s in 0..n_s {
                            let mut x = m[s];
                            for k in 0..=s {
                                x += l[(s, k)] * z[k];
                            }
                            samples[(t - start) * n_s + s].push(x);
                        }
                    }
                }
            }
            let mut cells = Vec::with_capacity(n_cells);
            for t in start..end {
                for s in 0..n_s {
                    let i = (t - start) * n_s + s;
                    let smp = &mut samples[i];
                    let sd = summarize(smp).sd;
                    smp.sort_by(f64::total_cmp);
                    cells.push(ForecastCell {
                        t,
                        date: data.dates()[t],
                        site: s,
                        site_id: data.site_ids()[s].clone(),
                        mean: mean_acc[i] / params.len() as f64,
                        sd,
                        q2_5: quantile_sorted(smp, 0.025),
                        q50: quantile_sorted(smp, 0.5),
                        q97_5: quantile_sorted(smp, 0.975),
                        observed: data.value(t, s),
                    });
                }
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Fraction of observed cells inside their 95% predictive interval.
/// Returns `NaN` when no cell is observed.
pub fn predictive_coverage(cells: &[ForecastCell], data: &Dataset) -> f64 {
    let (mut hit, mut n) = (0usize, 0usize);
    for c in cells {
        if let Some(y) = data.value(c.t, c.site) {
            n += 1;
            hit += (c.q2_5 <= y && y <= c.q97_5) as usize;
        }
    }
    hit as f64 / n as f64
}
