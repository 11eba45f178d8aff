use crate::error::{Error, Result};
use crate::model::data::{Covariate, Dataset, SiteGroup};
use crate::model::params::{Layout, ParameterSet, THETA2_SUPPORT};
use crate::model::spec::{CovariateRole, ModelSpec, Variant};
use crate::scalar::Real;
use crate::stats::{self, Constrained, Mat, SpdMatrix, Support};

/// Responses with masked entries replaced by `params.y_missing` (row-major mask order).
pub fn complete_data<F: Real>(params: &ParameterSet<F>, data: &Dataset<F>) -> Result<Mat<F>> {
    let cells = data.missing_cells();
    if cells.len() != params.y_missing.len() {
        return Err(Error::LengthMismatch { expected: cells.len(), actual: params.y_missing.len() });
    }
    let mut y = data.y().clone();
    for (&(t, s), &v) in cells.iter().zip(&params.y_missing) {
        y[(t, s)] = v;
    }
    Ok(y)
}

fn check_time(variant: Variant, n_time: usize, t: usize) -> Result<()> {
    let min = variant.first_time();
    if t < min || t >= n_time {
        return Err(Error::TimeIndexOutOfRange { t, min, max: n_time.saturating_sub(1) });
    }
    Ok(())
}

/// Latent effect `U_k = Y_k − A − Σⱼ X_{jk} ∘ βⱼ`.
fn residual<F: Real>(params: &ParameterSet<F>, completed: &Mat<F>, covariates: &[Covariate<F>], k: usize) -> Vec<F> {
    (0..completed.cols())
        .map(|s| {
            let xb: F = covariates.iter().enumerate().map(|(j, c)| c.values[(k, s)] * params.beta[(j, s)]).sum();
            completed[(k, s)] - params.a[s] - xb
        })
        .collect()
}

/// Conditional mean `M_t` at 0-based time `t` (`t ≥ 1`, or `t ≥ 2` for `VARICH`).
pub fn conditional_mean<F: Real>(
    params: &ParameterSet<F>,
    spec: &ModelSpec,
    completed: &Mat<F>,
    covariates: &[Covariate<F>],
    t: usize,
) -> Result<Vec<F>> {
    check_time(spec.variant, completed.rows(), t)?;
    let n_sites = completed.cols();
    let u1 = residual(params, completed, covariates, t - 1);
    let latent = if spec.variant == Variant::Varich {
        let u2 = residual(params, completed, covariates, t - 2);
        let diff: Vec<F> = u1.iter().zip(&u2).map(|(&a, &b)| a - b).collect();
        let pd = params.phi.mul_vec(&diff);
        u1.iter().zip(&pd).map(|(&a, &b)| a + b).collect::<Vec<_>>()
    } else {
        params.phi.mul_vec(&u1)
    };
    Ok((0..n_sites)
        .map(|s| {
            let xb: F = covariates.iter().enumerate().map(|(j, c)| c.values[(t, s)] * params.beta[(j, s)]).sum();
            params.a[s] + xb + latent[s]
        })
        .collect())
}

/// Conditional covariance `Σ_t` at 0-based time `t`.
pub fn conditional_variance<F: Real>(params: &ParameterSet<F>, spec: &ModelSpec, completed: &Mat<F>, t: usize) -> Result<SpdMatrix<F>> {
    check_time(spec.variant, completed.rows(), t)?;
    if spec.variant.has_arch_variance() {
        let v: Vec<F> = (0..completed.cols())
            .map(|s| {
                let yl = completed[(t - 1, s)];
                params.theta1[s] + params.theta2[s] * yl * yl
            })
            .collect();
        SpdMatrix::new(Mat::diag(&v))
    } else {
        params.sigma.clone().ok_or_else(|| Error::ConstraintViolation("VAR_IW needs Sigma".into()))
    }
}

/// Joint posterior of one model variant on one dataset.
#[derive(Clone, Debug)]
pub struct Model<F = f64> {
    spec: ModelSpec,
    data: Dataset<F>,
    layout: Layout,
    beta_sd: Mat<F>,
    psi: SpdMatrix<F>,
}

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

impl<F: Real> Model<F> {
    pub fn new(spec: ModelSpec, data: Dataset<F>) -> Result<Self> {
        let n_sites = data.n_sites();
        spec.priors.validate(n_sites)?;
        if spec.covariate_roles.len() != data.n_covariates() {
            return Err(Error::InvalidConfig(format!(
                "{} covariate roles for {} covariates",
                spec.covariate_roles.len(),
                data.n_covariates()
            )));
        }
        if data.n_time() <= spec.variant.first_time() {
            return Err(Error::InvalidDataset(format!("{} needs more than {} time points", spec.variant, spec.variant.first_time())));
        }
        let pr = &spec.priors;
        let beta_sd = Mat::from_fn(data.n_covariates(), n_sites, |j, s| {
            let group = data.site_groups()[s];
            F::c(match (spec.covariate_roles[j], group) {
                (CovariateRole::Wind, _) => pr.sd_beta_wind,
                (CovariateRole::Dumping, SiteGroup::DumpSite) => pr.sd_effect_active,
                (CovariateRole::Dumping, SiteGroup::DredgingSite) => pr.sd_effect_inactive,
                (CovariateRole::Dredging, SiteGroup::DredgingSite) => pr.sd_effect_active,
                (CovariateRole::Dredging, SiteGroup::DumpSite) => pr.sd_effect_inactive,
            })
        });
        let psi = match &pr.psi {
            Some(rows) => {
                let m = Mat::from_rows(rows)?.cast::<F>();
                SpdMatrix::new(m)?
            }
            None => SpdMatrix::identity(n_sites),
        };
        let missing_support = Support::Interval { lo: pr.missing_prior.lo, hi: pr.missing_prior.hi };
        let layout = Layout::new(spec.variant, n_sites, data.n_covariates(), data.missing_cells(), missing_support);
        Ok(Model { spec, data, layout, beta_sd, psi })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset<F> {
        &self.data
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let names: Vec<String> = self.data.covariates().iter().map(|c| c.name.clone()).collect();
        self.layout.names(&names)
    }

    /// Prior standard deviation of `β[j, s]` after the site-group split.
    pub fn beta_prior_sd(&self, j: usize, s: usize) -> F {
        self.beta_sd[(j, s)]
    }

    pub fn psi(&self) -> &SpdMatrix<F> {
        &self.psi
    }

    pub fn unpack(&self, u: &[F]) -> Result<ParameterSet<F>> {
        Ok(self.layout.unpack(u)?.0)
    }

    pub fn pack(&self, params: &ParameterSet<F>) -> Result<Vec<F>> {
        self.layout.pack(params)
    }

    /// Conditional log-likelihood `Σ_{t ≥ t₀} log MVN(Y_t; M_t, Σ_t)` on the completed data.
    pub fn log_likelihood(&self, params: &ParameterSet<F>) -> Result<F> {
        self.layout.check(params)?;
        let completed = complete_data(params, &self.data)?;
        let mut total = F::zero();
        for t in self.spec.variant.first_time()..self.data.n_time() {
            let m = conditional_mean(params, &self.spec, &completed, self.data.covariates(), t)?;
            let v = conditional_variance(params, &self.spec, &completed, t)?;
            total = total + stats::mvn_logpdf(completed.row(t), &m, &v)?;
        }
        Ok(total)
    }

    /// Log posterior density at unconstrained `u`, including transform
    /// Jacobians. Non-finite values come back as `-∞`.
    pub fn log_posterior(&self, u: &[F]) -> Result<F> {
        Ok(self.evaluate(u, None)?)
    }

    pub fn grad_log_posterior(&self, u: &[F]) -> Result<Vec<F>> {
        let mut g = vec![F::zero(); u.len()];
        self.evaluate(u, Some(&mut g))?;
        Ok(g)
    }

    pub fn logp_and_grad(&self, u: &[F], grad: &mut [F]) -> Result<F> {
        if grad.len() != u.len() {
            return Err(Error::LengthMismatch { expected: u.len(), actual: grad.len() });
        }
        self.evaluate(u, Some(grad))
    }

    fn evaluate(&self, u: &[F], mut grad: Option<&mut [F]>) -> Result<F> {
        let lay = &self.layout;
        if u.len() != lay.dim() {
            return Err(Error::LengthMismatch { expected: lay.dim(), actual: u.len() });
        }
        let want = grad.is_some();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = F::zero());
        }
        let variant = self.spec.variant;
        let pr = &self.spec.priors;
        let n_s = lay.n_sites;
        let n_t = self.data.n_time();
        let n_cov = lay.n_cov;
        let t0 = variant.first_time();
        let integrated = variant == Variant::Varich;
        let diag_phi = variant.has_diag_phi();
        let arch = variant.has_arch_variance();
        let zero = F::zero();
        let half = F::c(0.5);
        let hl2p = F::c(HALF_LN_TWO_PI);

        let a = &u[lay.off_a..lay.off_beta];
        let beta = &u[lay.off_beta..lay.off_phi];
        let mut phi = Mat::zeros(n_s, n_s);
        if diag_phi {
            for i in 0..n_s {
                phi[(i, i)] = u[lay.off_phi + i];
            }
        } else {
            phi.as_mut_slice().copy_from_slice(&u[lay.off_phi..lay.off_theta1]);
        }

        let mut lp = zero;
        let (th1, th2): (Vec<Constrained<F>>, Vec<Constrained<F>>) = if arch {
            (
                (0..n_s).map(|i| Support::Positive.constrain(u[lay.off_theta1 + i])).collect(),
                (0..n_s).map(|i| THETA2_SUPPORT.constrain(u[lay.off_theta2 + i])).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        for c in th1.iter().chain(&th2) {
            lp = lp + c.log_jac;
        }
        let factor = if arch {
            None
        } else {
            let (l, lj) = lay.unpack_factor(&u[lay.off_sigma..lay.off_missing]);
            lp = lp + lj;
            Some(l)
        };
        let miss: Vec<Constrained<F>> = u[lay.off_missing..].iter().map(|&v| lay.missing_support.constrain(v)).collect();
        for c in &miss {
            lp = lp + c.log_jac;
        }

        let mut y = self.data.y().clone();
        for (&(t, s), c) in lay.missing_cells.iter().zip(&miss) {
            y[(t, s)] = c.value;
        }
        let covs = self.data.covariates();
        let mut r = Mat::zeros(n_t, n_s);
        for t in 0..n_t {
            for s in 0..n_s {
                let mut xb = zero;
                for (j, c) in covs.iter().enumerate() {
                    xb = xb + c.values[(t, s)] * beta[j * n_s + s];
                }
                r[(t, s)] = y[(t, s)] - a[s] - xb;
            }
        }

        let mut g_r = if want { Mat::zeros(n_t, n_s) } else { Mat::zeros(0, 0) };
        let mut g_y_lag = if want && arch { Mat::zeros(n_t, n_s) } else { Mat::zeros(0, 0) };
        let mut g_phi = vec![zero; if want { n_s * n_s } else { 0 }];
        let mut g_th1 = vec![zero; th1.len()];
        let mut g_th2 = vec![zero; th2.len()];
        let mut scatter = Mat::zeros(n_s, n_s);
        let (linv, omega) = match &factor {
            Some(l) => {
                let linv = l.inverse();
                let omega = linv.transpose().matmul(&linv)?;
                (linv, omega)
            }
            None => (Mat::zeros(0, 0), Mat::zeros(0, 0)),
        };
        let log_diag_l = factor.as_ref().map_or(zero, |l| l.log_diag_sum());

        let mut lag = vec![zero; n_s];
        let mut e = vec![zero; n_s];
        let mut ge = vec![zero; n_s];
        let mut n_terms = 0usize;
        for t in t0..n_t {
            for i in 0..n_s {
                lag[i] = if integrated { r[(t - 1, i)] - r[(t - 2, i)] } else { r[(t - 1, i)] };
            }
            for i in 0..n_s {
                let cur = if integrated { r[(t, i)] - r[(t - 1, i)] } else { r[(t, i)] };
                let pred = if diag_phi { phi[(i, i)] * lag[i] } else { stats_dot(phi.row(i), &lag) };
                e[i] = cur - pred;
            }
            n_terms += 1;
            if arch {
                for i in 0..n_s {
                    let yl = y[(t - 1, i)];
                    let y2 = yl * yl;
                    let v = th1[i].value + th2[i].value * y2;
                    lp = lp - hl2p - half * v.ln() - half * e[i] * e[i] / v;
                    if want {
                        ge[i] = -e[i] / v;
                        let gv = half * (e[i] * e[i] / v - F::one()) / v;
                        g_th1[i] = g_th1[i] + gv;
                        g_th2[i] = g_th2[i] + gv * y2;
                        g_y_lag[(t - 1, i)] = g_y_lag[(t - 1, i)] + gv * F::c(2.0) * th2[i].value * yl;
                    }
                }
            } else {
                let z = linv.mul_vec(&e);
                let quad: F = z.iter().map(|&x| x * x).sum();
                lp = lp - F::c(n_s as f64) * hl2p - log_diag_l - half * quad;
                if want {
                    let oe = omega.mul_vec(&e);
                    for i in 0..n_s {
                        ge[i] = -oe[i];
                        for k in 0..n_s {
                            scatter[(i, k)] = scatter[(i, k)] + e[i] * e[k];
                        }
                    }
                }
            }
            if want {
                let w: Vec<F> = if diag_phi { (0..n_s).map(|i| phi[(i, i)] * ge[i]).collect() } else { phi.tr_mul_vec(&ge) };
                for i in 0..n_s {
                    g_r[(t, i)] = g_r[(t, i)] + ge[i];
                    if integrated {
                        g_r[(t - 1, i)] = g_r[(t - 1, i)] - ge[i] - w[i];
                        g_r[(t - 2, i)] = g_r[(t - 2, i)] + w[i];
                    } else {
                        g_r[(t - 1, i)] = g_r[(t - 1, i)] - w[i];
                    }
                    if diag_phi {
                        g_phi[i * n_s + i] = g_phi[i * n_s + i] - ge[i] * lag[i];
                    } else {
                        for k in 0..n_s {
                            g_phi[i * n_s + k] = g_phi[i * n_s + k] - ge[i] * lag[k];
                        }
                    }
                }
            }
        }

        // Priors on constrained values.
        let sd_a = F::c(pr.sd_a);
        for &x in a {
            lp = lp + stats::normal_logpdf(x, zero, sd_a);
        }
        for j in 0..n_cov {
            for s in 0..n_s {
                lp = lp + stats::normal_logpdf(beta[j * n_s + s], zero, self.beta_sd[(j, s)]);
            }
        }
        let phi_sd = |i: usize, k: usize| F::c(if i == k { pr.sd_phi_diag } else { pr.sd_phi_offdiag });
        for i in 0..n_s {
            for k in 0..n_s {
                if diag_phi && i != k {
                    continue;
                }
                lp = lp + stats::normal_logpdf(phi[(i, k)], zero, phi_sd(i, k));
            }
        }
        let tp1 = pr.theta1_prior;
        let tp2 = pr.theta2_prior;
        let mp = pr.missing_prior;
        let prior_terms = (|| -> Result<F> {
            let mut acc = zero;
            for c in &th1 {
                acc = acc + stats::trunc_normal_logpdf(c.value, F::c(tp1.mu), F::c(tp1.sd), F::c(tp1.lo), F::c(tp1.hi))?;
            }
            for c in &th2 {
                acc = acc + stats::beta_logpdf(c.value, F::c(tp2.a), F::c(tp2.b))?;
            }
            if let Some(l) = &factor {
                let sigma = SpdMatrix::from_factor(l.clone())?;
                acc = acc + stats::inv_wishart_logpdf(&sigma, &self.psi, F::c(pr.nu))?;
            }
            for c in &miss {
                acc = acc + stats::trunc_normal_logpdf(c.value, F::c(mp.mu), F::c(mp.sd), F::c(mp.lo), F::c(mp.hi))?;
            }
            Ok(acc)
        })();
        lp = match prior_terms {
            Ok(v) => lp + v,
            // Boundary underflow of a transform or a degenerate factor.
            Err(Error::OutOfSupport { .. }) | Err(Error::NotPositiveDefinite { .. }) => F::neg_infinity(),
            Err(e) => return Err(e),
        };
        if !lp.is_finite() {
            return Ok(F::neg_infinity());
        }

        let Some(g) = grad else { return Ok(lp) };

        // Chain rule back to the unconstrained coordinates.
        for s in 0..n_s {
            let mut acc = zero;
            for t in 0..n_t {
                acc = acc + g_r[(t, s)];
            }
            g[lay.off_a + s] = -acc - a[s] / (sd_a * sd_a);
        }
        for (j, c) in covs.iter().enumerate() {
            for s in 0..n_s {
                let mut acc = zero;
                for t in 0..n_t {
                    acc = acc + g_r[(t, s)] * c.values[(t, s)];
                }
                let sd = self.beta_sd[(j, s)];
                let b = beta[j * n_s + s];
                g[lay.off_beta + j * n_s + s] = -acc - b / (sd * sd);
            }
        }
        for i in 0..n_s {
            for k in 0..n_s {
                if diag_phi && i != k {
                    continue;
                }
                let sd = phi_sd(i, k);
                let gv = g_phi[i * n_s + k] - phi[(i, k)] / (sd * sd);
                let idx = if diag_phi { lay.off_phi + i } else { lay.off_phi + i * n_s + k };
                g[idx] = gv;
            }
        }
        let one = F::one();
        for i in 0..th1.len() {
            let c = th1[i];
            let gp = -(c.value - F::c(tp1.mu)) / F::c(tp1.sd * tp1.sd);
            g[lay.off_theta1 + i] = (g_th1[i] + gp) * c.dvalue + c.dlog_jac;
            let c = th2[i];
            let gp = F::c(tp2.a - 1.0) / c.value - F::c(tp2.b - 1.0) / (one - c.value);
            g[lay.off_theta2 + i] = (g_th2[i] + gp) * c.dvalue + c.dlog_jac;
        }
        if let Some(l) = &factor {
            // dℓ/dΣ from the likelihood and the inverse-Wishart prior; symmetric.
            let nf = F::c(n_terms as f64);
            let oso = omega.matmul(&scatter)?.matmul(&omega)?;
            let opo = omega.matmul(self.psi.matrix())?.matmul(&omega)?;
            let coef = nf + F::c(pr.nu) + F::c(n_s as f64) + one;
            let gs = Mat::from_fn(n_s, n_s, |i, k| half * (oso[(i, k)] + opo[(i, k)] - coef * omega[(i, k)]));
            let gl = gs.matmul(l.matrix())?;
            let mut idx = lay.off_sigma;
            for i in 0..n_s {
                for k in 0..=i {
                    let d = F::c(2.0) * gl[(i, k)];
                    g[idx] = if i == k { d * l.matrix()[(i, i)] + F::c((n_s - i + 1) as f64) } else { d };
                    idx += 1;
                }
            }
        }
        let mp_var = F::c(mp.sd * mp.sd);
        for (k, (&(t, s), c)) in lay.missing_cells.iter().zip(&miss).enumerate() {
            let mut gy = g_r[(t, s)] - (c.value - F::c(mp.mu)) / mp_var;
            if arch {
                gy = gy + g_y_lag[(t, s)];
            }
            g[lay.off_missing + k] = gy * c.dvalue + c.dlog_jac;
        }
        Ok(lp)
    }
}

#[inline]
fn stats_dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}
