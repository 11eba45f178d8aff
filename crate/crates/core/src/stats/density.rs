use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::matrix::SpdMatrix;
use crate::stats::special::{ln_gamma, ln_std_normal_mass};

#[inline]
fn half_ln_two_pi<F: Real>() -> F {
    F::c(0.918_938_533_204_672_7)
}

pub fn normal_logpdf<F: Real>(x: F, mu: F, sd: F) -> F {
    let z = (x - mu) / sd;
    -half_ln_two_pi::<F>() - sd.ln() - F::c(0.5) * z * z
}

/// Multivariate normal log density evaluated through the Cholesky factor of `sigma`.
pub fn mvn_logpdf<F: Real>(y: &[F], mu: &[F], sigma: &SpdMatrix<F>) -> Result<F> {
    let n = sigma.dim();
    if y.len() != n || mu.len() != n {
        return Err(Error::DimensionMismatch(format!("y has {}, mu has {}, covariance is {n}x{n}", y.len(), mu.len())));
    }
    let r: Vec<F> = y.iter().zip(mu).map(|(&a, &b)| a - b).collect();
    let z = sigma.factor().solve_lower(&r);
    let quad: F = z.iter().map(|&v| v * v).sum();
    Ok(-F::c(n as f64) * half_ln_two_pi::<F>() - sigma.factor().log_diag_sum() - F::c(0.5) * quad)
}

/// `log Γ_p(a)`, the log multivariate gamma function.
pub fn ln_multigamma<F: Real>(p: usize, a: F) -> F {
    let pf = F::c(p as f64);
    let mut out = pf * (pf - F::one()) * F::c(0.25) * F::PI().ln();
    for j in 0..p {
        out = out + ln_gamma(a - F::c(j as f64) * F::c(0.5));
    }
    out
}

/// Inverse-Wishart log density `IW(Σ; Ψ, ν)` with its normalizing constant.
pub fn inv_wishart_logpdf<F: Real>(sigma: &SpdMatrix<F>, psi: &SpdMatrix<F>, nu: F) -> Result<F> {
    let p = sigma.dim();
    if psi.dim() != p {
        return Err(Error::DimensionMismatch(format!("Sigma is {p}x{p}, Psi is {0}x{0}", psi.dim())));
    }
    let pf = F::c(p as f64);
    if !(nu > pf - F::one()) {
        return Err(Error::InvalidDegreesOfFreedom { nu: nu.f64(), min: (pf - F::one()).f64() });
    }
    let half = F::c(0.5);
    // tr(Ψ Σ⁻¹) = Σ_ij Ψ_ij (Σ⁻¹)_ij for symmetric matrices.
    let inv = sigma.inverse();
    let trace: F = psi.matrix().as_slice().iter().zip(inv.as_slice()).map(|(&a, &b)| a * b).sum();
    Ok(nu * half * psi.log_det()
        - nu * pf * half * F::LN_2()
        - ln_multigamma(p, nu * half)
        - (nu + pf + F::one()) * half * sigma.log_det()
        - half * trace)
}

/// Normal log density truncated to `[lo, hi]`; `hi` may be `+∞`.
pub fn trunc_normal_logpdf<F: Real>(x: F, mu: F, sd: F, lo: F, hi: F) -> Result<F> {
    if !(sd > F::zero()) || !(lo < hi) {
        return Err(Error::InvalidConfig(format!("truncated normal needs sd > 0 and lo < hi (sd={sd}, lo={lo}, hi={hi})")));
    }
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfSupport { value: x.f64(), support: format!("[{lo}, {hi}]") });
    }
    Ok(normal_logpdf(x, mu, sd) - ln_std_normal_mass((lo - mu) / sd, (hi - mu) / sd))
}

pub fn beta_logpdf<F: Real>(x: F, a: F, b: F) -> Result<F> {
    if !(a > F::zero() && b > F::zero()) {
        return Err(Error::InvalidConfig(format!("beta shape parameters must be positive (a={a}, b={b})")));
    }
    if !(x > F::zero() && x < F::one()) {
        return Err(Error::OutOfSupport { value: x.f64(), support: "(0, 1)".into() });
    }
    let one = F::one();
    Ok((a - one) * x.ln() + (b - one) * (-x).ln_1p() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b))
}
