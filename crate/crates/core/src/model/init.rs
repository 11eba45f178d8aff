//! Data-informed starting points for the sampler.
//!
//! Uniform draws on the unconstrained space can start `Φ` far outside the
//! stationary region. A chain started there tends to settle on the `Φ ≈ 1`
//! ridge where the intercept drops out of the residuals, and it may not
//! leave it within a short warmup. Starts are instead jittered around site
//! means with a row-dominant `Φ`, so every start is stationary.

use rand::Rng;

use crate::error::Result;
use crate::model::params::{Layout, ParameterSet};
use crate::model::Dataset;
use crate::scalar::Real;
use crate::stats::{Mat, SpdMatrix, Support};

const PHI_DIAG: f64 = 0.5;
/// Off-diagonal `Φ` jitter, scaled so each row's absolute sum stays below 0.8.
const PHI_OFFDIAG_ROW: f64 = 0.3;
const JITTER: f64 = 1.0;
const MISSING_JITTER: f64 = 0.5;

struct SiteMoments {
    mean: f64,
    sd: f64,
}

fn site_moments<F: Real>(data: &Dataset<F>, s: usize) -> SiteMoments {
    let obs: Vec<f64> = (0..data.n_time()).filter_map(|t| data.value(t, s)).map(|v| v.f64()).collect();
    if obs.is_empty() {
        return SiteMoments { mean: 0.0, sd: 1.0 };
    }
    let n = obs.len() as f64;
    let mean = obs.iter().sum::<f64>() / n;
    let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    SiteMoments { mean, sd: var.sqrt().max(1e-3) }
}

/// Linear interpolation between the nearest observed values of the same site.
fn interpolate<F: Real>(data: &Dataset<F>, t: usize, s: usize, fallback: f64) -> f64 {
    let before = (0..t).rev().find_map(|k| data.value(k, s).map(|v| (k, v.f64())));
    let after = (t + 1..data.n_time()).find_map(|k| data.value(k, s).map(|v| (k, v.f64())));
    match (before, after) {
        (Some((a, va)), Some((b, vb))) => va + (vb - va) * (t - a) as f64 / (b - a) as f64,
        (Some((_, v)), None) | (None, Some((_, v))) => v,
        (None, None) => fallback,
    }
}

/// A random stationary starting point in unconstrained space.
pub fn initial_position<F: Real, R: Rng + ?Sized>(layout: &Layout, data: &Dataset<F>, rng: &mut R) -> Result<Vec<F>> {
    let s_n = layout.n_sites;
    let moments: Vec<SiteMoments> = (0..s_n).map(|s| site_moments(data, s)).collect();
    let mut u = |r: f64| rng.random_range(-r..=r);

    let a: Vec<f64> = moments.iter().map(|m| m.mean + m.sd * u(JITTER)).collect();
    let beta = Mat::from_fn(layout.n_cov, s_n, |_, _| 0.1 * u(JITTER));
    let off = if s_n > 1 { PHI_OFFDIAG_ROW / (s_n - 1) as f64 } else { 0.0 };
    let diag_only = layout.variant.has_diag_phi();
    let phi = Mat::from_fn(s_n, s_n, |i, j| {
        if i == j {
            u(PHI_DIAG)
        } else if diag_only {
            0.0
        } else {
            u(off)
        }
    });
    let (theta1, theta2, sigma) = if layout.variant.has_arch_variance() {
        let t1 = moments.iter().map(|m| m.sd * m.sd * 0.5 * u(JITTER).exp()).collect();
        let t2 = (0..s_n).map(|_| 0.05 * u(JITTER).exp()).collect();
        (t1, t2, None)
    } else {
        let d: Vec<f64> = moments.iter().map(|m| m.sd * m.sd * 0.5 * u(JITTER).exp()).collect();
        (Vec::new(), Vec::new(), Some(SpdMatrix::new(Mat::diag(&d))?))
    };
    let (lo, hi) = match layout.missing_support {
        Support::Interval { lo, hi } => (lo, hi),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let margin = 1e-2 * (hi - lo).min(1.0);
    let y_missing = layout
        .missing_cells
        .clone()
        .into_iter()
        .map(|(t, s)| interpolate(data, t, s, moments[s].mean).clamp(lo + margin, hi - margin))
        .collect();
    let p = ParameterSet { a, beta, phi, theta1, theta2, sigma, y_missing };
    let mut q = layout.pack(&p)?;
    for x in &mut q[layout.off_missing..] {
        *x += u(MISSING_JITTER);
    }
    Ok(q.into_iter().map(F::c).collect())
}
