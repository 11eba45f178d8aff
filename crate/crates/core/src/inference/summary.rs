//! Posterior summaries.

use serde::{Deserialize, Serialize};

use super::diagnostics::sample_var;
use crate::error::{Error, Result};
use crate::sampler::PosteriorDraws;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
}

/// Quantile by linear interpolation between order statistics of sorted `x`.
pub fn quantile_sorted(x: &[f64], p: f64) -> f64 {
    let h = (x.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

/// Mean, sd and equal-tailed 95% interval of `values`. Panics if empty.
pub fn summarize(values: &[f64]) -> Summary {
    assert!(!values.is_empty(), "summarize needs at least one value");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Summary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        sd: sample_var(values).sqrt(),
        q2_5: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q97_5: quantile_sorted(&sorted, 0.975),
    }
}

/// Summary of one named parameter pooled over chains.
pub fn summarize_parameter(draws: &PosteriorDraws, name: &str) -> Result<Summary> {
    let k = draws.index_of(name).ok_or_else(|| Error::InvalidConfig(format!("unknown parameter {name}")))?;
    let pooled: Vec<f64> = draws.pooled().map(|d| d[k]).collect();
    if pooled.is_empty() {
        return Err(Error::InsufficientDraws { needed: 1, got: 0 });
    }
    Ok(summarize(&pooled))
}

/// Pooled posterior mean of every coordinate.
pub fn posterior_mean(draws: &PosteriorDraws) -> Vec<f64> {
    let mut acc = vec![0.0; draws.n_params()];
    let mut n = 0usize;
    for d in draws.pooled() {
        for (a, v) in acc.iter_mut().zip(d) {
            *a += v;
        }
        n += 1;
    }
    acc.iter().map(|a| a / n.max(1) as f64).collect()
}
