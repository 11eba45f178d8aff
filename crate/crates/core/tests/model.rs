mod common;

use bvarch::model::{
    complete_data, conditional_mean, conditional_variance, daily_dates, Covariate, Dataset, Model, ModelSpec, ParameterSet, SiteGroup,
    Variant,
};
use bvarch::stats::{self, Mat, SpdMatrix};
use bvarch::Error;
use chrono::NaiveDate;
use common::{dataset, random_point, rng, slow_log_posterior};
use proptest::prelude::*;
use statrs::distribution::{Continuous, Normal};

fn model(variant: Variant, data: &Dataset) -> Model {
    Model::new(ModelSpec::new(variant), data.clone()).unwrap()
}

fn bare(y: Vec<Vec<Option<f64>>>) -> Dataset {
    let n_sites = y[0].len();
    let n = y.len();
    Dataset::new(
        y,
        vec![],
        (0..n_sites).map(|s| format!("s{s}")).collect(),
        vec![SiteGroup::DumpSite; n_sites],
        daily_dates(NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), n),
    )
    .unwrap()
}

fn params_1d(a: f64, phi: f64, th1: f64, th2: f64) -> ParameterSet {
    ParameterSet {
        a: vec![a],
        beta: Mat::zeros(0, 1),
        phi: Mat::diag(&[phi]),
        theta1: vec![th1],
        theta2: vec![th2],
        sigma: None,
        y_missing: vec![],
    }
}

fn finite_difference(m: &Model, u: &[f64], h: f64) -> Vec<f64> {
    let mut w = u.to_vec();
    (0..u.len())
        .map(|i| {
            w[i] = u[i] + h;
            let up = m.log_posterior(&w).unwrap();
            w[i] = u[i] - h;
            let dn = m.log_posterior(&w).unwrap();
            w[i] = u[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

#[test]
fn complete_data_examples() {
    let data = bare(vec![vec![Some(1.0), Some(2.0)], vec![Some(3.0), None], vec![Some(5.0), Some(6.0)]]);
    let mut p = ParameterSet {
        a: vec![0.0; 2],
        beta: Mat::zeros(0, 2),
        phi: Mat::zeros(2, 2),
        theta1: vec![1.0; 2],
        theta2: vec![0.1; 2],
        sigma: None,
        y_missing: vec![42.0],
    };
    let y = complete_data(&p, &data).unwrap();
    assert_eq!(y[(1, 1)], 42.0);
    assert_eq!(y[(2, 0)], 5.0);
    p.y_missing.clear();
    assert!(matches!(complete_data(&p, &data), Err(Error::LengthMismatch { .. })));

    let all = data.with_missing(&[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
    p.y_missing = (1..=6).map(f64::from).collect();
    let y = complete_data(&p, &all).unwrap();
    assert_eq!(y.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
}

#[test]
fn conditional_mean_examples() {
    let data = bare(vec![vec![Some(3.0)], vec![Some(4.0)], vec![Some(0.0)]]);
    let spec = ModelSpec::new(Variant::Varch);
    let y = data.y().clone();
    let m = conditional_mean(&params_1d(1.0, 0.5, 1.0, 0.1), &spec, &y, &[], 1).unwrap();
    assert!((m[0] - 2.0).abs() < 1e-15);
    let m = conditional_mean(&params_1d(1.0, 0.0, 1.0, 0.1), &spec, &y, &[], 2).unwrap();
    assert_eq!(m, vec![1.0]);

    let data = bare(vec![vec![Some(2.0)], vec![Some(5.0)], vec![Some(0.0)]]);
    let spec = ModelSpec::new(Variant::Varich);
    let m = conditional_mean(&params_1d(0.0, 0.0, 1.0, 0.1), &spec, data.y(), &[], 2).unwrap();
    assert_eq!(m, vec![5.0]);
    let err = conditional_mean(&params_1d(0.0, 0.0, 1.0, 0.1), &spec, data.y(), &[], 1);
    assert!(matches!(err, Err(Error::TimeIndexOutOfRange { t: 1, min: 2, .. })));
    let err = conditional_mean(&params_1d(0.0, 0.0, 1.0, 0.1), &spec, data.y(), &[], 3);
    assert!(matches!(err, Err(Error::TimeIndexOutOfRange { .. })));
}

#[test]
fn conditional_mean_with_covariates_uses_hadamard_product() {
    let data = dataset(2, 6, 0.0, 4);
    let spec = ModelSpec::new(Variant::Varch);
    let p = ParameterSet {
        a: vec![1.0, 2.0],
        beta: Mat::from_rows(&[[0.5, -0.5], [1.5, 2.5], [0.1, 0.2]]).unwrap(),
        phi: Mat::from_rows(&[[0.3, 0.1], [-0.2, 0.4]]).unwrap(),
        theta1: vec![1.0; 2],
        theta2: vec![0.1; 2],
        sigma: None,
        y_missing: vec![],
    };
    let t = 3;
    let m = conditional_mean(&p, &spec, data.y(), data.covariates(), t).unwrap();
    let fixed = |k: usize, s: usize| p.a[s] + (0..3).map(|j| data.covariates()[j].values[(k, s)] * p.beta[(j, s)]).sum::<f64>();
    let u: Vec<f64> = (0..2).map(|s| data.y()[(t - 1, s)] - fixed(t - 1, s)).collect();
    for s in 0..2 {
        let want = fixed(t, s) + p.phi[(s, 0)] * u[0] + p.phi[(s, 1)] * u[1];
        assert!((m[s] - want).abs() < 1e-12);
    }
}

#[test]
fn conditional_variance_examples() {
    let data = bare(vec![vec![Some(2.0)], vec![Some(7.0)], vec![Some(1.0)]]);
    let spec = ModelSpec::new(Variant::Arch);
    let v = conditional_variance(&params_1d(0.0, 0.0, 1.0, 0.5), &spec, data.y(), 1).unwrap();
    assert!((v.matrix()[(0, 0)] - 3.0).abs() < 1e-15);
    let v1 = conditional_variance(&params_1d(0.0, 0.0, 1.3, 0.0), &spec, data.y(), 1).unwrap();
    let v2 = conditional_variance(&params_1d(0.0, 0.0, 1.3, 0.0), &spec, data.y(), 2).unwrap();
    assert_eq!(v1.matrix()[(0, 0)], 1.3);
    assert_eq!(v2.matrix()[(0, 0)], 1.3);

    let data = bare(vec![vec![Some(1.0), Some(1.0)]; 4]);
    let sigma = SpdMatrix::new(Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
    let p = ParameterSet {
        a: vec![0.0; 2],
        beta: Mat::zeros(0, 2),
        phi: Mat::zeros(2, 2),
        theta1: vec![],
        theta2: vec![],
        sigma: Some(sigma.clone()),
        y_missing: vec![],
    };
    let spec = ModelSpec::new(Variant::VarIw);
    for t in 1..4 {
        assert_eq!(conditional_variance(&p, &spec, data.y(), t).unwrap().matrix(), sigma.matrix());
    }
    assert!(conditional_variance(&p, &spec, data.y(), 0).is_err());
}

#[test]
fn log_posterior_matches_slow_oracle() {
    let mut r = rng(11);
    for variant in Variant::ALL {
        for (p_missing, seed) in [(0.0, 1), (0.2, 2)] {
            let data = dataset(2, 5, p_missing, seed);
            let m = model(variant, &data);
            for _ in 0..10 {
                let u = random_point(m.dim(), &mut r);
                let fast = m.log_posterior(&u).unwrap();
                let slow = slow_log_posterior(m.spec(), &data, &u);
                assert!((fast - slow).abs() < 1e-9, "{variant}: {fast} vs {slow}");
            }
        }
    }
}

#[test]
fn all_masked_matches_slow_oracle() {
    let base = dataset(2, 5, 0.0, 3);
    let cells: Vec<_> = (0..5).flat_map(|t| (0..2).map(move |s| (t, s))).collect();
    let data = base.with_missing(&cells);
    assert_eq!(data.n_missing(), 10);
    let mut r = rng(5);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        let u = random_point(m.dim(), &mut r);
        let fast = m.log_posterior(&u).unwrap();
        let slow = slow_log_posterior(m.spec(), &data, &u);
        assert!((fast - slow).abs() < 1e-9, "{variant}: {fast} vs {slow}");
    }
}

#[test]
fn likelihood_routes_agree() {
    // The per-time MVN route and the fused evaluator differ only by priors
    // and Jacobians, which cancel when two points share them.
    let data = dataset(3, 12, 0.1, 8);
    let mut r = rng(9);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        let u = random_point(m.dim(), &mut r);
        let mut w = u.clone();
        for s in 0..3 {
            w[s] += 0.3;
        }
        let ll = |x: &[f64]| m.log_likelihood(&m.unpack(x).unwrap()).unwrap();
        let prior_a = |x: &[f64]| (0..3).map(|s| stats::normal_logpdf(x[s], 0.0, 100.0)).sum::<f64>();
        let d_fast = m.log_posterior(&w).unwrap() - m.log_posterior(&u).unwrap();
        let d_slow = ll(&w) - ll(&u) + prior_a(&w) - prior_a(&u);
        assert!((d_fast - d_slow).abs() < 1e-9 * d_fast.abs().max(1.0), "{variant}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let data = dataset(3, 30, 0.1, 21);
    assert!(data.n_missing() > 0);
    let mut r = rng(22);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        for _ in 0..10 {
            let u = random_point(m.dim(), &mut r);
            let g = m.grad_log_posterior(&u).unwrap();
            let fd = finite_difference(&m, &u, 1e-5);
            for (i, (a, b)) in g.iter().zip(&fd).enumerate() {
                assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{variant} coord {i}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn logp_and_grad_agree_with_separate_calls() {
    let data = dataset(2, 8, 0.1, 30);
    let m = model(Variant::Varich, &data);
    let u = random_point(m.dim(), &mut rng(1));
    let mut g = vec![0.0; m.dim()];
    let lp = m.logp_and_grad(&u, &mut g).unwrap();
    assert_eq!(lp, m.log_posterior(&u).unwrap());
    assert_eq!(g, m.grad_log_posterior(&u).unwrap());
    assert!(matches!(m.logp_and_grad(&u, &mut g[1..]), Err(Error::LengthMismatch { .. })));
    assert!(matches!(m.log_posterior(&u[1..]), Err(Error::LengthMismatch { .. })));
}

#[test]
fn gaussian_prior_gradient_vanishes_at_symmetric_point() {
    // Y ≡ 0 and u = 0 make every residual zero, so only the symmetric priors
    // act on A, β and Φ, and their gradient is zero there.
    let base = dataset(3, 10, 0.0, 40);
    let data = base.with_values(Mat::zeros(10, 3)).unwrap();
    for variant in Variant::ALL {
        let m = model(variant, &data);
        let g = m.grad_log_posterior(&vec![0.0; m.dim()]).unwrap();
        let n_gauss = if variant == Variant::Arch { 3 + 9 + 3 } else { 3 + 9 + 9 };
        assert!(g[..n_gauss].iter().all(|&x| x == 0.0), "{variant}: {:?}", &g[..n_gauss]);
    }
}

#[test]
fn arch_equals_varch_with_diagonal_phi() {
    let data = dataset(3, 20, 0.1, 50);
    let arch = model(Variant::Arch, &data);
    let varch = model(Variant::Varch, &data);
    let mut r = rng(51);
    let off_prior = 6.0 * stats::normal_logpdf(0.0, 0.0, 0.1);
    for _ in 0..5 {
        let u = random_point(arch.dim(), &mut r);
        let p = arch.unpack(&u).unwrap();
        let uv = varch.pack(&p).unwrap();
        let la = arch.log_likelihood(&p).unwrap();
        let lv = varch.log_likelihood(&p).unwrap();
        assert!((la - lv).abs() < 1e-12);
        let pa = arch.log_posterior(&u).unwrap();
        let pv = varch.log_posterior(&uv).unwrap();
        assert!((pa - (pv - off_prior)).abs() < 1e-9 * pa.abs().max(1.0));
    }
}

#[test]
fn arch_rejects_off_diagonal_phi() {
    let data = dataset(2, 6, 0.0, 1);
    let m = model(Variant::Arch, &data);
    let mut p = m.unpack(&vec![0.0; m.dim()]).unwrap();
    p.phi[(0, 1)] = 0.2;
    assert!(matches!(m.pack(&p), Err(Error::ConstraintViolation(_))));
}

fn permute_params(p: &ParameterSet, order: &[usize], old_cells: &[(usize, usize)], new_cells: &[(usize, usize)]) -> ParameterSet {
    let s = order.len();
    let inv: Vec<usize> = {
        let mut v = vec![0; s];
        for (k, &o) in order.iter().enumerate() {
            v[o] = k;
        }
        v
    };
    let y_missing = new_cells
        .iter()
        .map(|&(t, k)| {
            let pos = old_cells.iter().position(|&c| c == (t, order[k])).unwrap();
            p.y_missing[pos]
        })
        .collect();
    let _ = inv;
    ParameterSet {
        a: order.iter().map(|&o| p.a[o]).collect(),
        beta: Mat::from_fn(p.beta.rows(), s, |j, k| p.beta[(j, order[k])]),
        phi: Mat::from_fn(s, s, |i, k| p.phi[(order[i], order[k])]),
        theta1: if p.theta1.is_empty() { vec![] } else { order.iter().map(|&o| p.theta1[o]).collect() },
        theta2: if p.theta2.is_empty() { vec![] } else { order.iter().map(|&o| p.theta2[o]).collect() },
        sigma: p.sigma.as_ref().map(|m| SpdMatrix::new(Mat::from_fn(s, s, |i, k| m.matrix()[(order[i], order[k])])).unwrap()),
        y_missing,
    }
}

#[test]
fn site_permutation_leaves_posterior_unchanged() {
    let data = dataset(3, 15, 0.15, 60);
    let order = [2, 0, 1];
    let perm = data.permute_sites(&order);
    let mut r = rng(61);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        let mp = model(variant, &perm);
        let u = random_point(m.dim(), &mut r);
        let p = m.unpack(&u).unwrap();
        let pp = permute_params(&p, &order, &data.missing_cells(), &perm.missing_cells());
        let a = m.log_likelihood(&p).unwrap();
        let b = mp.log_likelihood(&pp).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{variant}: {a} vs {b}");
        if variant != Variant::VarIw {
            // Per-coordinate transforms permute with the sites. The Cholesky
            // parameterization of Σ does not, so VAR_IW is compared on the likelihood.
            let up = mp.pack(&pp).unwrap();
            let (x, y) = (m.log_posterior(&u).unwrap(), mp.log_posterior(&up).unwrap());
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{variant}: {x} vs {y}");
        }
    }
}

#[test]
fn varch_without_dynamics_is_independent_gaussian() {
    let data = dataset(3, 25, 0.0, 70);
    let spec = ModelSpec::new(Variant::Varch);
    let p = ParameterSet {
        a: vec![4.0, 5.0, 6.0],
        beta: Mat::from_rows(&[[1.0, 0.1, 2.0], [0.2, 3.0, -0.1], [0.05, 0.1, -0.2]]).unwrap(),
        phi: Mat::zeros(3, 3),
        theta1: vec![0.7, 1.1, 2.3],
        theta2: vec![0.0; 3],
        sigma: None,
        y_missing: vec![],
    };
    let mut got = 0.0;
    let mut want = 0.0;
    for t in 1..25 {
        let m = conditional_mean(&p, &spec, data.y(), data.covariates(), t).unwrap();
        let v = conditional_variance(&p, &spec, data.y(), t).unwrap();
        got += stats::mvn_logpdf(data.y().row(t), &m, &v).unwrap();
        for s in 0..3 {
            let mean = p.a[s] + (0..3).map(|j| data.covariates()[j].values[(t, s)] * p.beta[(j, s)]).sum::<f64>();
            want += Normal::new(mean, p.theta1[s].sqrt()).unwrap().ln_pdf(data.y()[(t, s)]);
        }
    }
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn phi_gradient_is_invariant_to_level_shift() {
    let data = dataset(3, 20, 0.0, 80);
    let c = 7.5;
    let shifted = data.with_values(Mat::from_fn(20, 3, |t, s| data.y()[(t, s)] + c)).unwrap();
    let m = model(Variant::VarIw, &data);
    let ms = model(Variant::VarIw, &shifted);
    let mut r = rng(81);
    for _ in 0..5 {
        let u = random_point(m.dim(), &mut r);
        let mut us = u.clone();
        for s in 0..3 {
            us[s] += c;
        }
        let g = m.grad_log_posterior(&u).unwrap();
        let gs = ms.grad_log_posterior(&us).unwrap();
        // Φ occupies coordinates after A (3) and β (9).
        for i in 12..21 {
            assert!((g[i] - gs[i]).abs() < 1e-8 * g[i].abs().max(1.0), "{i}: {} vs {}", g[i], gs[i]);
        }
    }
}

#[test]
fn sigma_factor_jacobian_matches_numeric_determinant() {
    let data = dataset(3, 6, 0.0, 90);
    let m = model(Variant::VarIw, &data);
    let lay = m.layout();
    let off = lay.dim() - 6;
    let mut r = rng(91);
    let vech = |u: &[f64]| -> Vec<f64> {
        let sig = m.unpack(u).unwrap().sigma.unwrap();
        let mut v = vec![];
        for i in 0..3 {
            for j in 0..=i {
                v.push(sig.matrix()[(i, j)]);
            }
        }
        v
    };
    for _ in 0..5 {
        let u = random_point(m.dim(), &mut r);
        let (_, log_jac) = lay.unpack(&u).unwrap();
        let h = 1e-6;
        let mut jac = nalgebra::DMatrix::zeros(6, 6);
        for k in 0..6 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[off + k] += h;
            dn[off + k] -= h;
            let (a, b) = (vech(&up), vech(&dn));
            for i in 0..6 {
                jac[(i, k)] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        let numeric = jac.determinant().abs().ln();
        assert!((numeric - log_jac).abs() < 1e-6, "{numeric} vs {log_jac}");
    }
}

#[test]
fn inverse_wishart_with_jacobian_integrates_to_one() {
    // Trapezoid rule over the unconstrained factor coordinates of a 2 × 2 Σ.
    let data = dataset(2, 4, 0.0, 100);
    let m = model(Variant::VarIw, &data);
    let lay = m.layout();
    let off = lay.dim() - 3;
    let psi = SpdMatrix::identity(2);
    let n = 90;
    let grid = |lo: f64, hi: f64| -> (Vec<f64>, f64) {
        let h = (hi - lo) / (n - 1) as f64;
        ((0..n).map(|k| lo + k as f64 * h).collect(), h)
    };
    let (g0, h0) = grid(-3.5, 0.5);
    let (g1, h1) = grid(-1.2, 1.2);
    let (g2, h2) = grid(-3.5, 0.5);
    let mut u = vec![0.0; lay.dim()];
    let mut total = 0.0;
    for &a in &g0 {
        for &b in &g1 {
            for &c in &g2 {
                u[off] = a;
                u[off + 1] = b;
                u[off + 2] = c;
                let (p, lj) = lay.unpack(&u).unwrap();
                let lp = stats::inv_wishart_logpdf(p.sigma.as_ref().unwrap(), &psi, 14.0).unwrap();
                total += (lp + lj).exp();
            }
        }
    }
    total *= h0 * h1 * h2;
    assert!((total - 1.0).abs() < 1e-4, "{total}");
}

#[test]
fn single_precision_model_tracks_double() {
    let data = dataset(3, 20, 0.1, 110);
    let m64 = model(Variant::Varch, &data);
    let m32: Model<f32> = Model::new(ModelSpec::new(Variant::Varch), data.cast::<f32>()).unwrap();
    let u = random_point(m64.dim(), &mut rng(111));
    let u32: Vec<f32> = u.iter().map(|&x| x as f32).collect();
    let a = m64.log_posterior(&u).unwrap();
    let b = m32.log_posterior(&u32).unwrap() as f64;
    assert!(((a - b) / a).abs() < 1e-4, "{a} vs {b}");
    let g64 = m64.grad_log_posterior(&u).unwrap();
    let g32 = m32.grad_log_posterior(&u32).unwrap();
    for (x, y) in g64.iter().zip(&g32) {
        assert!((x - *y as f64).abs() < 1e-2 * x.abs().max(1.0));
    }
}

#[test]
fn log_posterior_finite_in_interior() {
    let data = dataset(3, 20, 0.2, 120);
    let mut r = rng(121);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        for _ in 0..50 {
            let u: Vec<f64> = (0..m.dim()).map(|_| rand::Rng::random_range(&mut r, -4.0..4.0)).collect();
            assert!(m.log_posterior(&u).unwrap().is_finite());
        }
    }
}

#[test]
fn pack_unpack_round_trip() {
    let data = dataset(3, 10, 0.2, 130);
    let mut r = rng(131);
    for variant in Variant::ALL {
        let m = model(variant, &data);
        let u = random_point(m.dim(), &mut r);
        let p = m.unpack(&u).unwrap();
        let back = m.pack(&p).unwrap();
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
        let v = m.layout().constrained_vector(&p);
        assert_eq!(v.len(), m.parameter_names().len());
        let q = m.layout().from_constrained(&v).unwrap();
        assert_eq!(q.a, p.a);
        assert_eq!(q.y_missing, p.y_missing);
    }
}

#[test]
fn parameter_names_follow_layout() {
    let data = dataset(2, 5, 0.0, 1).with_missing(&[(3, 1)]);
    let names = model(Variant::VarIw, &data).parameter_names();
    assert_eq!(&names[..2], &["A[1]", "A[2]"]);
    assert_eq!(names[2], "beta[dumping,1]");
    assert!(names.contains(&"Phi[1,2]".to_string()));
    assert!(names.contains(&"Sigma[2,1]".to_string()));
    assert_eq!(names.last().unwrap(), "y_missing[4,2]");
    let arch = model(Variant::Arch, &data).parameter_names();
    assert!(!arch.contains(&"Phi[1,2]".to_string()));
    assert!(arch.contains(&"theta2[2]".to_string()));
}

#[test]
fn model_rejects_bad_setup() {
    let data = dataset(2, 5, 0.0, 1);
    let spec = ModelSpec::with_roles(Variant::Varch, vec![bvarch::model::CovariateRole::Wind]);
    assert!(matches!(Model::new(spec, data.clone()), Err(Error::InvalidConfig(_))));
    let mut spec = ModelSpec::new(Variant::VarIw);
    spec.priors.nu = 0.5;
    assert!(Model::new(spec, data).is_err());
}

#[test]
fn site_split_priors() {
    let data = dataset(2, 5, 0.0, 1);
    let m = model(Variant::Varch, &data);
    assert_eq!(data.site_groups()[0], SiteGroup::DumpSite);
    assert_eq!(m.beta_prior_sd(0, 0), 25.0);
    assert_eq!(m.beta_prior_sd(0, 1), 0.3);
    assert_eq!(m.beta_prior_sd(1, 0), 0.3);
    assert_eq!(m.beta_prior_sd(1, 1), 25.0);
    assert_eq!(m.beta_prior_sd(2, 1), 1.0);
}

#[test]
fn dataset_validation() {
    let dates = daily_dates(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), 3);
    let ok = |y: Vec<Vec<Option<f64>>>, cov: Vec<Covariate<f64>>, d: Vec<NaiveDate>| {
        Dataset::new(y, cov, vec!["a".into()], vec![SiteGroup::DumpSite], d)
    };
    assert!(ok(vec![vec![Some(1.0)]; 2], vec![], dates[..2].to_vec()).is_err());
    let mut gap = dates.clone();
    gap[2] = gap[2] + chrono::Days::new(1);
    assert!(ok(vec![vec![Some(1.0)]; 3], vec![], gap).is_err());
    let bad_cov = Covariate { name: "wind".into(), values: Mat::from_vec(3, 1, vec![1.0, f64::NAN, 2.0]).unwrap() };
    assert!(matches!(ok(vec![vec![Some(1.0)]; 3], vec![bad_cov], dates.clone()), Err(Error::MissingCovariate(_))));
    let d = ok(vec![vec![Some(1.0)], vec![None], vec![Some(2.0)]], vec![], dates).unwrap();
    assert_eq!(d.missing_cells(), vec![(1, 0)]);
    assert_eq!(d.value(1, 0), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn gradient_property(seed in 0u64..10_000, vi in 0usize..4) {
        let variant = Variant::ALL[vi];
        let data = dataset(2, 12, 0.1, seed);
        let m = model(variant, &data);
        let u = random_point(m.dim(), &mut rng(seed + 1));
        let g = m.grad_log_posterior(&u).unwrap();
        let fd = finite_difference(&m, &u, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
        }
    }
}
