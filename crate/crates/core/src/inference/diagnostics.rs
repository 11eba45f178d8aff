//! Split R-hat and effective sample size.

use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `n − 1`, shifted by the first element so that
/// constant input gives exactly zero.
pub(crate) fn sample_var(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let x0 = x[0];
    let (s, ss) = x.iter().fold((0.0, 0.0), |(s, ss), &v| {
        let d = v - x0;
        (s + d, ss + d * d)
    });
    ((ss - s * s / n as f64) / (n - 1) as f64).max(0.0)
}

/// Split-R̂ over the halves of every chain (a middle draw of an odd-length
/// chain is dropped).
///
/// `R̂ = sqrt(((n−1)/n · W + B/n) / W)` with `W` the mean within-half variance
/// and `B/n` the variance of the half means.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let n_min = chains.iter().map(Vec::len).min().unwrap_or(0);
    if chains.is_empty() || n_min < 4 {
        return Err(Error::InsufficientDraws { needed: 4, got: n_min });
    }
    let half = n_min / 2;
    let mut halves = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let c = &c[..n_min];
        halves.push(&c[..half]);
        halves.push(&c[n_min - half..]);
    }
    if halves.iter().all(|h| h.iter().all(|&v| v == halves[0][0])) {
        return Err(Error::ZeroVariance);
    }
    let n = half as f64;
    let w = mean(&halves.iter().map(|h| sample_var(h)).collect::<Vec<_>>());
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let b_over_n = sample_var(&means);
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((((n - 1.0) / n * w + b_over_n) / w).sqrt())
}

/// Autocovariance at `lag` with divisor `n`.
fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n - lag {
        acc += (x[i] - m) * (x[i + lag] - m);
    }
    acc / n as f64
}

/// Multi-chain effective sample size from autocorrelations truncated by
/// Geyer's initial monotone positive sequence.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if chains.is_empty() || n < 4 {
        return Err(Error::InsufficientDraws { needed: 4, got: n });
    }
    let m = chains.len();
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().map(|c| sample_var(c)).collect();
    let w = mean(&vars);
    if w == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let nf = n as f64;
    let var_plus = w * (nf - 1.0) / nf + if m > 1 { sample_var(&means) } else { 0.0 };
    let rho = |lag: usize| -> f64 {
        let acov: f64 = chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, lag)).sum::<f64>() / m as f64;
        1.0 - (w * (nf - 1.0) / nf - acov) / var_plus
    };
    // Pairs P_k = ρ_{2k} + ρ_{2k+1}, kept while positive and made monotone.
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let p = rho(lag) + rho(lag + 1);
        if p <= 0.0 {
            break;
        }
        let p = p.min(prev);
        tau += 2.0 * p;
        prev = p;
        lag += 2;
    }
    let total = (m * n) as f64;
    let tau = tau.max(1.0 / total.log10().max(1.0));
    Ok(total / tau)
}
