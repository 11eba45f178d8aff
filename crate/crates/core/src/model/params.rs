use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::spec::Variant;
use crate::scalar::Real;
use crate::stats::{LowerTriangular, Mat, SpdMatrix, Support};

/// All model parameters in constrained space.
///
/// `theta1`/`theta2` are empty for `VAR_IW`; `sigma` is present only for
/// `VAR_IW`. For `ARCH` the off-diagonal entries of `phi` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<F = f64> {
    pub a: Vec<F>,
    /// `P × S`, row `j` holds the effects of covariate `j`.
    pub beta: Mat<F>,
    pub phi: Mat<F>,
    pub theta1: Vec<F>,
    pub theta2: Vec<F>,
    pub sigma: Option<SpdMatrix<F>>,
    /// Imputed responses in row-major mask order.
    pub y_missing: Vec<F>,
}

/// Serializable mirror of [`ParameterSet`] used in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterValues {
    pub a: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    #[serde(default)]
    pub theta1: Vec<f64>,
    #[serde(default)]
    pub theta2: Vec<f64>,
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub y_missing: Vec<f64>,
}

impl ParameterValues {
    pub fn into_params(self) -> Result<ParameterSet<f64>> {
        let n_sites = self.a.len();
        let beta = if self.beta.is_empty() { Mat::zeros(0, n_sites) } else { Mat::from_rows(&self.beta)? };
        let sigma = match self.sigma {
            Some(rows) => Some(SpdMatrix::new(Mat::from_rows(&rows)?)?),
            None => None,
        };
        Ok(ParameterSet {
            a: self.a,
            beta,
            phi: Mat::from_rows(&self.phi)?,
            theta1: self.theta1,
            theta2: self.theta2,
            sigma,
            y_missing: self.y_missing,
        })
    }

    pub fn from_params(p: &ParameterSet<f64>) -> Self {
        let rows = |m: &Mat<f64>| (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
        ParameterValues {
            a: p.a.clone(),
            beta: rows(&p.beta),
            phi: rows(&p.phi),
            theta1: p.theta1.clone(),
            theta2: p.theta2.clone(),
            sigma: p.sigma.as_ref().map(|s| rows(s.matrix())),
            y_missing: p.y_missing.clone(),
        }
    }
}

/// Packed layout of the unconstrained parameter vector.
///
/// Order: `A`, `β` (covariate-major), `Φ` (row-major, diagonal only for
/// `ARCH`), `log θ₁`, `logit θ₂`, Cholesky factor of `Σ` (`VAR_IW` only,
/// row-major lower triangle with log diagonal), scaled-logit imputed values
/// (row-major mask order).
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub variant: Variant,
    pub n_sites: usize,
    pub n_cov: usize,
    pub missing_cells: Vec<(usize, usize)>,
    pub missing_support: Support,
    pub(crate) off_a: usize,
    pub(crate) off_beta: usize,
    pub(crate) off_phi: usize,
    pub(crate) off_theta1: usize,
    pub(crate) off_theta2: usize,
    pub(crate) off_sigma: usize,
    pub(crate) off_missing: usize,
    dim: usize,
}

pub(crate) const THETA2_SUPPORT: Support = Support::Interval { lo: 0.0, hi: 1.0 };

impl Layout {
    pub fn new(variant: Variant, n_sites: usize, n_cov: usize, missing_cells: Vec<(usize, usize)>, missing_support: Support) -> Self {
        let s = n_sites;
        let n_phi = if variant.has_diag_phi() { s } else { s * s };
        let n_theta = if variant.has_arch_variance() { s } else { 0 };
        let n_sigma = if variant.has_arch_variance() { 0 } else { s * (s + 1) / 2 };
        let off_a = 0;
        let off_beta = off_a + s;
        let off_phi = off_beta + n_cov * s;
        let off_theta1 = off_phi + n_phi;
        let off_theta2 = off_theta1 + n_theta;
        let off_sigma = off_theta2 + n_theta;
        let off_missing = off_sigma + n_sigma;
        let dim = off_missing + missing_cells.len();
        Layout {
            variant,
            n_sites,
            n_cov,
            missing_cells,
            missing_support,
            off_a,
            off_beta,
            off_phi,
            off_theta1,
            off_theta2,
            off_sigma,
            off_missing,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Names of the constrained coordinates, 1-based indices.
    pub fn names(&self, covariate_names: &[String]) -> Vec<String> {
        let s = self.n_sites;
        let mut out = Vec::with_capacity(self.dim);
        out.extend((1..=s).map(|i| format!("A[{i}]")));
        for j in 0..self.n_cov {
            let cov = covariate_names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
            out.extend((1..=s).map(|i| format!("beta[{cov},{i}]")));
        }
        if self.variant.has_diag_phi() {
            out.extend((1..=s).map(|i| format!("Phi[{i},{i}]")));
        } else {
            for i in 1..=s {
                out.extend((1..=s).map(|j| format!("Phi[{i},{j}]")));
            }
        }
        if self.variant.has_arch_variance() {
            out.extend((1..=s).map(|i| format!("theta1[{i}]")));
            out.extend((1..=s).map(|i| format!("theta2[{i}]")));
        } else {
            for i in 1..=s {
                out.extend((1..=i).map(|j| format!("Sigma[{i},{j}]")));
            }
        }
        out.extend(self.missing_cells.iter().map(|&(t, i)| format!("y_missing[{},{}]", t + 1, i + 1)));
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, actual: len });
        }
        Ok(())
    }

    /// Maps an unconstrained vector to parameters and the summed log-Jacobian
    /// of every transform (including `L ↦ L Lᵀ` for `Σ`).
    pub fn unpack<F: Real>(&self, u: &[F]) -> Result<(ParameterSet<F>, F)> {
        self.check_len(u.len())?;
        let s = self.n_sites;
        let mut log_jac = F::zero();
        let a = u[self.off_a..self.off_beta].to_vec();
        let beta = Mat::from_vec(self.n_cov, s, u[self.off_beta..self.off_phi].to_vec())?;
        let phi = if self.variant.has_diag_phi() {
            Mat::diag(&u[self.off_phi..self.off_theta1])
        } else {
            Mat::from_vec(s, s, u[self.off_phi..self.off_theta1].to_vec())?
        };
        let mut theta1 = Vec::new();
        let mut theta2 = Vec::new();
        for k in 0..(self.off_theta2 - self.off_theta1) {
            let c1 = Support::Positive.constrain(u[self.off_theta1 + k]);
            let c2 = THETA2_SUPPORT.constrain(u[self.off_theta2 + k]);
            log_jac = log_jac + c1.log_jac + c2.log_jac;
            theta1.push(c1.value);
            theta2.push(c2.value);
        }
        let sigma = if self.variant.has_arch_variance() {
            None
        } else {
            let (l, lj) = self.unpack_factor(&u[self.off_sigma..self.off_missing]);
            log_jac = log_jac + lj;
            Some(SpdMatrix::from_factor(l)?)
        };
        let mut y_missing = Vec::with_capacity(self.missing_cells.len());
        for &v in &u[self.off_missing..] {
            let c = self.missing_support.constrain(v);
            log_jac = log_jac + c.log_jac;
            y_missing.push(c.value);
        }
        Ok((ParameterSet { a, beta, phi, theta1, theta2, sigma, y_missing }, log_jac))
    }

    /// Cholesky factor from its packed coordinates, with `log |∂Σ/∂u|`.
    ///
    /// `Σ = L Lᵀ` contributes `S log 2 + Σᵢ (S − i) log Lᵢᵢ` (0-based `i`) and
    /// the log-diagonal transform adds `Σᵢ log Lᵢᵢ`.
    pub(crate) fn unpack_factor<F: Real>(&self, packed: &[F]) -> (LowerTriangular<F>, F) {
        let s = self.n_sites;
        let mut l = Mat::zeros(s, s);
        let mut log_jac = F::c(s as f64) * F::LN_2();
        let mut k = 0;
        for i in 0..s {
            for j in 0..=i {
                if i == j {
                    l[(i, i)] = packed[k].exp();
                    log_jac = log_jac + F::c((s - i + 1) as f64) * packed[k];
                } else {
                    l[(i, j)] = packed[k];
                }
                k += 1;
            }
        }
        (LowerTriangular::new(l).expect("lower by construction"), log_jac)
    }

    pub fn check<F: Real>(&self, p: &ParameterSet<F>) -> Result<()> {
        let s = self.n_sites;
        let bad = |m: String| Err(Error::ConstraintViolation(m));
        if p.a.len() != s || p.beta.rows() != self.n_cov || p.beta.cols() != s {
            return bad(format!("A/beta shapes do not match {s} sites and {} covariates", self.n_cov));
        }
        if p.phi.rows() != s || p.phi.cols() != s {
            return bad("Phi must be S x S".into());
        }
        if self.variant.has_diag_phi() {
            for i in 0..s {
                for j in 0..s {
                    if i != j && p.phi[(i, j)] != F::zero() {
                        return bad("ARCH requires diagonal Phi".into());
                    }
                }
            }
        }
        let finite = p.a.iter().chain(p.beta.as_slice()).chain(p.phi.as_slice()).all(|x| x.is_finite());
        if !finite {
            return bad("non-finite A, beta or Phi".into());
        }
        if self.variant.has_arch_variance() {
            if p.theta1.len() != s || p.theta2.len() != s {
                return bad("theta1/theta2 need one entry per site".into());
            }
            if !p.theta1.iter().all(|&x| Support::Positive.contains(x)) {
                return bad("theta1 must be positive".into());
            }
            if !p.theta2.iter().all(|&x| THETA2_SUPPORT.contains(x)) {
                return bad("theta2 must lie in (0, 1)".into());
            }
        } else {
            match &p.sigma {
                Some(sig) if sig.dim() == s => {}
                _ => return bad("VAR_IW needs an S x S Sigma".into()),
            }
        }
        if p.y_missing.len() != self.missing_cells.len() {
            return Err(Error::LengthMismatch { expected: self.missing_cells.len(), actual: p.y_missing.len() });
        }
        if !p.y_missing.iter().all(|&x| self.missing_support.contains(x)) {
            return bad(format!("imputed values must lie in {}", self.missing_support));
        }
        Ok(())
    }

    /// Inverse of [`Layout::unpack`].
    pub fn pack<F: Real>(&self, p: &ParameterSet<F>) -> Result<Vec<F>> {
        self.check(p)?;
        let s = self.n_sites;
        let mut u = Vec::with_capacity(self.dim);
        u.extend_from_slice(&p.a);
        u.extend_from_slice(p.beta.as_slice());
        if self.variant.has_diag_phi() {
            u.extend(p.phi.diagonal());
        } else {
            u.extend_from_slice(p.phi.as_slice());
        }
        for &x in &p.theta1 {
            u.push(Support::Positive.unconstrain(x)?.0);
        }
        for &x in &p.theta2 {
            u.push(THETA2_SUPPORT.unconstrain(x)?.0);
        }
        if let Some(sig) = &p.sigma {
            let l = sig.factor().matrix();
            for i in 0..s {
                for j in 0..=i {
                    u.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
                }
            }
        }
        for &x in &p.y_missing {
            u.push(self.missing_support.unconstrain(x)?.0);
        }
        Ok(u)
    }

    /// Flat constrained view matching [`Layout::names`].
    pub fn constrained_vector<F: Real>(&self, p: &ParameterSet<F>) -> Vec<F> {
        let s = self.n_sites;
        let mut v = Vec::with_capacity(self.dim);
        v.extend_from_slice(&p.a);
        v.extend_from_slice(p.beta.as_slice());
        if self.variant.has_diag_phi() {
            v.extend(p.phi.diagonal());
        } else {
            v.extend_from_slice(p.phi.as_slice());
        }
        v.extend_from_slice(&p.theta1);
        v.extend_from_slice(&p.theta2);
        if let Some(sig) = &p.sigma {
            for i in 0..s {
                for j in 0..=i {
                    v.push(sig.matrix()[(i, j)]);
                }
            }
        }
        v.extend_from_slice(&p.y_missing);
        v
    }

    /// Inverse of [`Layout::constrained_vector`].
    pub fn from_constrained<F: Real>(&self, v: &[F]) -> Result<ParameterSet<F>> {
        self.check_len(v.len())?;
        let s = self.n_sites;
        let a = v[self.off_a..self.off_beta].to_vec();
        let beta = Mat::from_vec(self.n_cov, s, v[self.off_beta..self.off_phi].to_vec())?;
        let phi = if self.variant.has_diag_phi() {
            Mat::diag(&v[self.off_phi..self.off_theta1])
        } else {
            Mat::from_vec(s, s, v[self.off_phi..self.off_theta1].to_vec())?
        };
        let theta1 = v[self.off_theta1..self.off_theta2].to_vec();
        let theta2 = v[self.off_theta2..self.off_sigma].to_vec();
        let sigma = if self.variant.has_arch_variance() {
            None
        } else {
            let mut m = Mat::zeros(s, s);
            let mut k = self.off_sigma;
            for i in 0..s {
                for j in 0..=i {
                    m[(i, j)] = v[k];
                    m[(j, i)] = v[k];
                    k += 1;
                }
            }
            Some(SpdMatrix::new(m)?)
        };
        let p = ParameterSet { a, beta, phi, theta1, theta2, sigma, y_missing: v[self.off_missing..].to_vec() };
        self.check(&p)?;
        Ok(p)
    }
}
