#![allow(dead_code)]

use bvarch::model::{daily_dates, Covariate, Dataset, ModelSpec, SiteGroup, Variant};
use bvarch::stats::Mat;
use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset with dumping, dredging and wind covariates. Sites alternate
/// between dump and dredging groups; about `p_missing` of the cells are masked.
pub fn dataset(n_sites: usize, n_time: usize, p_missing: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let groups: Vec<SiteGroup> = (0..n_sites).map(|s| if s % 2 == 0 { SiteGroup::DumpSite } else { SiteGroup::DredgingSite }).collect();
    let dump = Mat::from_fn(n_time, n_sites, |_, s| if groups[s] == SiteGroup::DumpSite && r.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
    let dredge =
        Mat::from_fn(n_time, n_sites, |_, s| if groups[s] == SiteGroup::DredgingSite && r.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
    let wind_t: Vec<f64> = (0..n_time).map(|_| r.random_range(2.0..18.0)).collect();
    let wind = Mat::from_fn(n_time, n_sites, |t, _| wind_t[t]);
    let y: Vec<Vec<Option<f64>>> = (0..n_time)
        .map(|_| {
            (0..n_sites)
                .map(|_| {
                    let v = r.random_range(1.0..9.0);
                    if r.random::<f64>() < p_missing {
                        None
                    } else {
                        Some(v)
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(
        y,
        vec![
            Covariate { name: "dumping".into(), values: dump },
            Covariate { name: "dredging".into(), values: dredge },
            Covariate { name: "wind".into(), values: wind },
        ],
        (0..n_sites).map(|s| format!("site{}", s + 1)).collect(),
        groups,
        daily_dates(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), n_time),
    )
    .unwrap()
}

pub fn random_point(dim: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn norm_lpdf(x: f64, mu: f64, sd: f64) -> f64 {
    Normal::new(mu, sd).unwrap().ln_pdf(x)
}

fn trunc_lpdf(x: f64, mu: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let n = Normal::new(mu, sd).unwrap();
    n.ln_pdf(x) - (n.cdf(hi) - n.cdf(lo)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mvn_lpdf(y: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> f64 {
    let k = y.len();
    let d = nalgebra::DVector::from_iterator(k, y.iter().zip(mu).map(|(a, b)| a - b));
    let inv = sigma.clone().try_inverse().unwrap();
    let q = (d.transpose() * inv * &d)[0];
    -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + sigma.determinant().ln() + q)
}

fn iw_lpdf(sigma: &DMatrix<f64>, psi: &DMatrix<f64>, nu: f64) -> f64 {
    let p = sigma.nrows() as f64;
    let inv = sigma.clone().try_inverse().unwrap();
    let mut lmg = p * (p - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=sigma.nrows() {
        lmg += ln_gamma(nu / 2.0 + (1.0 - j as f64) / 2.0);
    }
    nu / 2.0 * psi.determinant().ln()
        - nu * p / 2.0 * 2f64.ln()
        - lmg
        - (nu + p + 1.0) / 2.0 * sigma.determinant().ln()
        - 0.5 * (psi * inv).trace()
}

/// Straightforward per-term log posterior over the documented packed layout.
pub fn slow_log_posterior(spec: &ModelSpec, data: &Dataset, u: &[f64]) -> f64 {
    let v = spec.variant;
    let pr = &spec.priors;
    let s = data.n_sites();
    let p = data.n_covariates();
    let n = data.n_time();
    let mut k = 0;
    let mut take = |m: usize| {
        let out = u[k..k + m].to_vec();
        k += m;
        out
    };
    let a = take(s);
    let beta = take(p * s);
    let mut phi = vec![vec![0.0; s]; s];
    if v == Variant::Arch {
        for (i, x) in take(s).into_iter().enumerate() {
            phi[i][i] = x;
        }
    } else {
        let flat = take(s * s);
        for i in 0..s {
            for j in 0..s {
                phi[i][j] = flat[i * s + j];
            }
        }
    }
    let mut lp = 0.0;
    let (mut th1, mut th2) = (vec![], vec![]);
    let mut sigma = DMatrix::zeros(s, s);
    if v != Variant::VarIw {
        for x in take(s) {
            th1.push(x.exp());
            lp += x;
        }
        for x in take(s) {
            let q = logistic(x);
            th2.push(q);
            lp += q.ln() + (1.0 - q).ln();
        }
    } else {
        let packed = take(s * (s + 1) / 2);
        let mut l = DMatrix::zeros(s, s);
        let mut c = 0;
        for i in 0..s {
            for j in 0..=i {
                l[(i, j)] = if i == j { packed[c].exp() } else { packed[c] };
                c += 1;
            }
        }
        // |∂Σ/∂L| = 2^S ∏ L_ii^(S−i+1) (1-based i), and ∂L_ii/∂u = L_ii.
        lp += s as f64 * 2f64.ln();
        for i in 1..=s {
            lp += ((s - i + 1) as f64 + 1.0) * l[(i - 1, i - 1)].ln();
        }
        sigma = &l * l.transpose();
    }
    let miss_u = take(data.n_missing());
    let (mlo, mhi) = (pr.missing_prior.lo, pr.missing_prior.hi);
    let mut y = vec![vec![0.0; s]; n];
    for t in 0..n {
        for i in 0..s {
            y[t][i] = data.y()[(t, i)];
        }
    }
    for (&(t, i), &x) in data.missing_cells().iter().zip(&miss_u) {
        let q = logistic(x);
        y[t][i] = mlo + (mhi - mlo) * q;
        lp += (mhi - mlo).ln() + q.ln() + (1.0 - q).ln();
        lp += trunc_lpdf(y[t][i], pr.missing_prior.mu, pr.missing_prior.sd, mlo, mhi);
    }
    let x = |j: usize, t: usize, i: usize| data.covariates()[j].values[(t, i)];
    let fixed = |t: usize, i: usize| a[i] + (0..p).map(|j| x(j, t, i) * beta[j * s + i]).sum::<f64>();
    let resid = |t: usize, i: usize| y[t][i] - fixed(t, i);
    let t0 = if v == Variant::Varich { 2 } else { 1 };
    for t in t0..n {
        let mut m = vec![0.0; s];
        for i in 0..s {
            let mut lat = 0.0;
            for j in 0..s {
                lat += if v == Variant::Varich { phi[i][j] * (resid(t - 1, j) - resid(t - 2, j)) } else { phi[i][j] * resid(t - 1, j) };
            }
            if v == Variant::Varich {
                lat += resid(t - 1, i);
            }
            m[i] = fixed(t, i) + lat;
        }
        if v == Variant::VarIw {
            lp += mvn_lpdf(&y[t], &m, &sigma);
        } else {
            for i in 0..s {
                let var = th1[i] + th2[i] * y[t - 1][i] * y[t - 1][i];
                lp += norm_lpdf(y[t][i], m[i], var.sqrt());
            }
        }
    }
    for &ai in &a {
        lp += norm_lpdf(ai, 0.0, pr.sd_a);
    }
    let roles = &spec.covariate_roles;
    for j in 0..p {
        for i in 0..s {
            use bvarch::model::CovariateRole::*;
            let g = data.site_groups()[i];
            let sd = match (roles[j], g) {
                (Wind, _) => pr.sd_beta_wind,
                (Dumping, SiteGroup::DumpSite) | (Dredging, SiteGroup::DredgingSite) => pr.sd_effect_active,
                _ => pr.sd_effect_inactive,
            };
            lp += norm_lpdf(beta[j * s + i], 0.0, sd);
        }
    }
    for i in 0..s {
        for j in 0..s {
            if i == j {
                lp += norm_lpdf(phi[i][j], 0.0, pr.sd_phi_diag);
            } else if v != Variant::Arch {
                lp += norm_lpdf(phi[i][j], 0.0, pr.sd_phi_offdiag);
            }
        }
    }
    let t1 = pr.theta1_prior;
    for &q in &th1 {
        lp += trunc_lpdf(q, t1.mu, t1.sd, t1.lo, t1.hi);
    }
    let b = Beta::new(pr.theta2_prior.a, pr.theta2_prior.b).unwrap();
    for &q in &th2 {
        lp += b.ln_pdf(q);
    }
    if v == Variant::VarIw {
        lp += iw_lpdf(&sigma, &DMatrix::identity(s, s), pr.nu);
    }
    lp
}
