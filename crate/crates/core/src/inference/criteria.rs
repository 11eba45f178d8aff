//! WAIC and Pareto-smoothed importance-sampling LOO.

use serde::{Deserialize, Serialize};

use super::diagnostics::sample_var;
use crate::error::{Error, Result};
use crate::stats::Mat;

/// Pareto shape above which a point's importance weights are unreliable.
pub const PARETO_K_BAD: f64 = 0.7;

/// Fraction of the largest importance ratios replaced by fitted quantiles.
const TAIL_FRACTION: f64 = 0.2;

/// Shortest tail worth fitting; shorter tails fall back to plain weights.
const MIN_TAIL: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub waic: f64,
    pub se: f64,
    pub p_waic: f64,
    pub lppd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loo {
    pub looic: f64,
    pub se: f64,
    pub elpd: f64,
    pub p_loo: f64,
    /// Fitted Pareto shape per point; 0 where the tail was too short to fit.
    pub pareto_k: Vec<f64>,
    /// Indices of points with `k > 0.7`.
    pub flagged: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    Pareto,
    /// Raw importance ratios, no tail smoothing.
    None,
}

fn check(loglik: &Mat<f64>) -> Result<()> {
    if loglik.rows() < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: loglik.rows() });
    }
    Ok(())
}

fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.rows()).map(|d| m[(d, j)]).collect()
}

fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `log mean exp(x)`, exact for constant `x`.
fn log_mean_exp(x: &[f64]) -> f64 {
    let c = max(x);
    c + (x.iter().map(|&v| (v - c).exp()).sum::<f64>() / x.len() as f64).ln()
}

fn se_of(contrib: &[f64]) -> f64 {
    (contrib.len() as f64 * sample_var(contrib)).sqrt()
}

/// WAIC from a draws × points log-likelihood matrix.
pub fn waic(loglik: &Mat<f64>) -> Result<Waic> {
    check(loglik)?;
    let mut contrib = Vec::with_capacity(loglik.cols());
    let (mut lppd, mut p_waic) = (0.0, 0.0);
    for j in 0..loglik.cols() {
        let col = column(loglik, j);
        let l = log_mean_exp(&col);
        let p = sample_var(&col);
        lppd += l;
        p_waic += p;
        contrib.push(-2.0 * (l - p));
    }
    Ok(Waic { waic: -2.0 * (lppd - p_waic), se: se_of(&contrib), p_waic, lppd })
}

/// PSIS-LOO; see [`loo_ic_with`].
pub fn loo_ic(loglik: &Mat<f64>) -> Result<Loo> {
    loo_ic_with(loglik, Smoothing::Pareto)
}

/// Importance-sampling LOO with raw ratios `exp(−loglik)`, optionally
/// smoothing the largest 20% with a fitted generalized Pareto distribution.
pub fn loo_ic_with(loglik: &Mat<f64>, smoothing: Smoothing) -> Result<Loo> {
    check(loglik)?;
    let mut elpd_i = Vec::with_capacity(loglik.cols());
    let mut pareto_k = Vec::with_capacity(loglik.cols());
    let mut lppd = 0.0;
    for j in 0..loglik.cols() {
        let col = column(loglik, j);
        let raw: Vec<f64> = col.iter().map(|&l| -l).collect();
        let (lw, k) = match smoothing {
            Smoothing::Pareto => psis_smooth(&raw),
            Smoothing::None => (raw.iter().map(|&r| r - max(&raw)).collect(), 0.0),
        };
        let c = max(&col);
        let num: f64 = lw.iter().zip(&col).map(|(&w, &l)| (w + l - c).exp()).sum();
        let den: f64 = lw.iter().map(|&w| w.exp()).sum();
        elpd_i.push(c + (num / den).ln());
        pareto_k.push(k);
        lppd += log_mean_exp(&col);
    }
    let elpd: f64 = elpd_i.iter().sum();
    let contrib: Vec<f64> = elpd_i.iter().map(|e| -2.0 * e).collect();
    let flagged = pareto_k.iter().enumerate().filter(|(_, &k)| k > PARETO_K_BAD).map(|(i, _)| i).collect();
    Ok(Loo { looic: -2.0 * elpd, se: se_of(&contrib), elpd, p_loo: lppd - elpd, pareto_k, flagged })
}

/// Smoothed log weights (shifted so the largest raw ratio is 0) and the
/// fitted shape.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let n = log_ratios.len();
    let top = max(log_ratios);
    let mut lw: Vec<f64> = log_ratios.iter().map(|&r| r - top).collect();
    let m = (TAIL_FRACTION * n as f64).ceil() as usize;
    if m < MIN_TAIL || m >= n {
        return (lw, 0.0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]));
    let cutoff = lw[order[n - m - 1]];
    let tail_idx = &order[n - m..];
    let exp_cut = cutoff.exp();
    let exceed: Vec<f64> = tail_idx.iter().map(|&i| lw[i].exp() - exp_cut).collect();
    if exceed.iter().all(|&x| x <= 0.0) {
        // Flat tail: nothing to smooth.
        return (lw, 0.0);
    }
    let (k, sigma) = gpd_fit(&exceed);
    if k.is_finite() {
        for (r, &i) in tail_idx.iter().enumerate() {
            let p = (r as f64 + 0.5) / m as f64;
            // Truncate smoothed values at the largest raw weight (0 after the shift).
            lw[i] = (gpd_quantile(p, k, sigma) + exp_cut).ln().min(0.0);
        }
    }
    (lw, k)
}

fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < 1e-12 {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Generalized Pareto fit by the Zhang–Stephens profile-likelihood grid with a
/// weakly informative shrinkage of `k` towards 0.5. `x` is sorted ascending.
pub fn gpd_fit(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let nf = n as f64;
    let prior = 3.0;
    let grid = 30 + (nf.sqrt() as usize);
    let x_star = x[((nf / 4.0 + 0.5).floor() as usize).max(1) - 1];
    let x_max = x[n - 1];
    let theta: Vec<f64> = (1..=grid).map(|j| 1.0 / x_max + (1.0 - (grid as f64 / (j as f64 - 0.5)).sqrt()) / prior / x_star).collect();
    let profile = |t: f64| -> f64 {
        let a = -t;
        let k = x.iter().map(|&v| (a * v).ln_1p()).sum::<f64>() / nf;
        nf * ((a / k).ln() - k - 1.0)
    };
    let l: Vec<f64> = theta.iter().map(|&t| profile(t)).collect();
    let lmax = l.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = l.iter().map(|&v| if v.is_finite() { (v - lmax).exp() } else { 0.0 }).collect();
    let wsum: f64 = w.iter().sum();
    let theta_hat: f64 = theta.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / wsum;
    let k = x.iter().map(|&v| (-theta_hat * v).ln_1p()).sum::<f64>() / nf;
    let sigma = -k / theta_hat;
    let k = (nf * k + 10.0 * 0.5) / (nf + 10.0);
    (if k.is_nan() { f64::INFINITY } else { k }, sigma)
}
