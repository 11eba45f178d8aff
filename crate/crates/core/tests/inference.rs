mod common;

use bvarch::inference::{
    build_report, ess, forecast_from_params, gpd_fit, likelihood_points, loo_ic, loo_ic_with, one_step_forecast, pointwise_loglik,
    predictive_coverage, spectral_radius, split_rhat, summarize, waic, ForecastCell, Smoothing, PARETO_K_BAD,
};
use bvarch::model::{Dataset, Model, ModelSpec, ParameterSet, Variant};
use bvarch::sampler::{run_chains, PosteriorDraws, SamplerConfig};
use bvarch::stats::{Mat, SpdMatrix};
use bvarch::Error;
use common::{dataset, random_point, rng};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Continuous, Normal};

fn normals(n: usize, mu: f64, r: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            mu + {
                let z: f64 = StandardNormal.sample(r);
                z
            }
        })
        .collect::<Vec<f64>>()
}

fn draws_from(model: &Model, params: &[ParameterSet]) -> PosteriorDraws {
    PosteriorDraws {
        names: model.parameter_names(),
        constrained: vec![params.iter().map(|p| model.layout().constrained_vector(p)).collect()],
        unconstrained: vec![],
        stats: vec![],
    }
}

#[test]
fn rhat_same_distribution() {
    let mut r = rng(1);
    let chains: Vec<Vec<f64>> = (0..4).map(|_| normals(1000, 0.0, &mut r)).collect();
    let v = split_rhat(&chains).unwrap();
    assert!((0.99..=1.01).contains(&v), "{v}");
}

#[test]
fn rhat_separated_chains() {
    let mut r = rng(2);
    let chains = vec![normals(1000, 0.0, &mut r), normals(1000, 5.0, &mut r)];
    assert!(split_rhat(&chains).unwrap() > 1.5);
}

#[test]
fn rhat_detects_trend_within_chain() {
    let chains: Vec<Vec<f64>> = (0..2).map(|_| (0..1000).map(|i| i as f64).collect()).collect();
    assert!(split_rhat(&chains).unwrap() > 1.5);
}

#[test]
fn rhat_constant_is_zero_variance() {
    assert!(matches!(split_rhat(&[vec![3.0; 100], vec![3.0; 100]]), Err(Error::ZeroVariance)));
    assert!(matches!(ess(&[vec![3.0; 100]]), Err(Error::ZeroVariance)));
}

#[test]
fn ess_of_independent_and_correlated_draws() {
    let mut r = rng(3);
    let iid: Vec<Vec<f64>> = (0..4).map(|_| normals(1000, 0.0, &mut r)).collect();
    let e = ess(&iid).unwrap();
    assert!((3000.0..5000.0).contains(&e), "{e}");
    let rho: f64 = 0.9;
    let ar: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let mut x = 0.0;
            (0..5000)
                .map(|_| {
                    x = rho * x
                        + (1.0 - rho * rho).sqrt() * {
                            let z: f64 = StandardNormal.sample(&mut r);
                            z
                        };
                    x
                })
                .collect()
        })
        .collect();
    let want = 20000.0 * (1.0 - rho) / (1.0 + rho);
    let e = ess(&ar).unwrap();
    assert!((e / want - 1.0).abs() < 0.25, "{e} vs {want}");
}

proptest! {
    #[test]
    fn rhat_affine_invariant(seed in 0u64..1000, a in -5.0f64..5.0, b in 0.1f64..10.0) {
        let mut r = rng(seed);
        let chains: Vec<Vec<f64>> = (0..3).map(|k| normals(200, k as f64 * 0.1, &mut r)).collect();
        let moved: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| a + b * x).collect()).collect();
        let (r1, r2) = (split_rhat(&chains).unwrap(), split_rhat(&moved).unwrap());
        prop_assert!((r1 - r2).abs() < 1e-10);
        // The lower bound of the formula is sqrt((n − 1)/n) for half-length n.
        prop_assert!(r1 >= (99.0f64 / 100.0).sqrt() - 1e-12);
    }

    #[test]
    fn summary_quantiles_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let s = summarize(&v);
        prop_assert!(s.q2_5 <= s.q50 && s.q50 <= s.q97_5);
    }

    #[test]
    fn spectral_radius_scales(seed in 0u64..1000, c in -3.0f64..3.0) {
        let mut r = rng(seed);
        let p = Mat::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
        let a = spectral_radius(&p.scale(c));
        let b = c.abs() * spectral_radius(&p);
        prop_assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn waic_examples() {
    let ll = Mat::from_rows(&[[-1.0, -2.0], [-1.0, -2.0], [-1.0, -2.0]]).unwrap();
    let w = waic(&ll).unwrap();
    assert_eq!(w.p_waic, 0.0);
    assert_eq!(w.lppd, -3.0);
    assert_eq!(w.waic, 6.0);

    let ll = Mat::from_rows(&[[-1.0], [-3.0]]).unwrap();
    let w = waic(&ll).unwrap();
    let lppd = ((-1f64).exp() + (-3f64).exp()).ln() - 2f64.ln();
    assert!((w.lppd - lppd).abs() < 1e-15);
    assert!((w.p_waic - 2.0).abs() < 1e-15);
    assert!((w.waic + 2.0 * (lppd - 2.0)).abs() < 1e-14);

    let ll = Mat::from_rows(&[[-1.0, -1.0, -1.0], [-2.0, -2.0, -2.0]]).unwrap();
    assert_eq!(waic(&ll).unwrap().se, 0.0);
    assert!(matches!(waic(&Mat::zeros(1, 3)), Err(Error::InsufficientDraws { .. })));
    assert!(matches!(loo_ic(&Mat::zeros(1, 3)), Err(Error::InsufficientDraws { .. })));
}

#[test]
fn zero_variance_waic_equals_looic_exactly() {
    let mut r = rng(4);
    let point: Vec<f64> = (0..20).map(|_| r.random_range(-5.0..-0.1)).collect();
    let ll = Mat::from_fn(50, 20, |_, j| point[j]);
    let (w, l) = (waic(&ll).unwrap(), loo_ic(&ll).unwrap());
    assert_eq!(w.waic, l.looic);
    assert_eq!(w.se, l.se);
}

/// Straightforward PSIS-LOO; shares only the documented algorithm.
fn brute_loo(ll: &Mat<f64>) -> (f64, Vec<f64>) {
    let s = ll.rows();
    let mut total = 0.0;
    let mut ks = vec![];
    for j in 0..ll.cols() {
        let l: Vec<f64> = (0..s).map(|d| ll[(d, j)]).collect();
        let top = l.iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max);
        let mut lw: Vec<f64> = l.iter().map(|x| -x - top).collect();
        let m = (0.2 * s as f64).ceil() as usize;
        let mut k = 0.0;
        if m >= 5 {
            let mut idx: Vec<usize> = (0..s).collect();
            idx.sort_by(|a, b| lw[*a].partial_cmp(&lw[*b]).unwrap());
            let cut = lw[idx[s - m - 1]].exp();
            let x: Vec<f64> = idx[s - m..].iter().map(|&i| lw[i].exp() - cut).collect();
            let (kk, sigma) = gpd_fit(&x);
            k = kk;
            for (r, &i) in idx[s - m..].iter().enumerate() {
                let p = (r as f64 + 0.5) / m as f64;
                let q = sigma / kk * ((1.0 - p).powf(-kk) - 1.0);
                lw[i] = (q + cut).ln().min(0.0);
            }
        }
        let num: f64 = lw.iter().zip(&l).map(|(w, x)| (w + x).exp()).sum();
        let den: f64 = lw.iter().map(|w| w.exp()).sum();
        total += (num / den).ln();
        ks.push(k);
    }
    (-2.0 * total, ks)
}

fn brute_waic(ll: &Mat<f64>) -> f64 {
    let s = ll.rows() as f64;
    let mut total = 0.0;
    for j in 0..ll.cols() {
        let l: Vec<f64> = (0..ll.rows()).map(|d| ll[(d, j)]).collect();
        let mean = l.iter().sum::<f64>() / s;
        let var = l.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0);
        total += (l.iter().map(|x| x.exp()).sum::<f64>() / s).ln() - var;
    }
    -2.0 * total
}

#[test]
fn criteria_match_brute_force() {
    let mut r = rng(5);
    for _ in 0..5 {
        let scale: Vec<f64> = (0..20).map(|_| r.random_range(0.1..2.0)).collect();
        let ll = Mat::from_fn(50, 20, |_, j| {
            -1.0 - scale[j]
                * {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z
                }
                * 0.5
                - scale[j]
        });
        let w = waic(&ll).unwrap();
        assert!((w.waic - brute_waic(&ll)).abs() < 1e-8);
        let l = loo_ic(&ll).unwrap();
        let (b, ks) = brute_loo(&ll);
        assert!((l.looic - b).abs() < 1e-8, "{} vs {b}", l.looic);
        for (a, b) in l.pareto_k.iter().zip(&ks) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn tiny_matrix_is_plain_importance_sampling() {
    let ll = Mat::from_rows(&[[-1.0, -0.5], [-2.0, -0.7], [-1.5, -0.2]]).unwrap();
    let l = loo_ic(&ll).unwrap();
    let plain = loo_ic_with(&ll, Smoothing::None).unwrap();
    assert!(l.pareto_k.iter().all(|&k| k < 0.5));
    let mut want = 0.0;
    for j in 0..2 {
        let w: Vec<f64> = (0..3).map(|d| (-ll[(d, j)]).exp()).collect();
        let num: f64 = (0..3).map(|d| w[d] * ll[(d, j)].exp()).sum();
        want += -2.0 * (num / w.iter().sum::<f64>()).ln();
    }
    assert!((l.looic - want).abs() < 1e-12);
    assert!((plain.looic - want).abs() < 1e-12);
}

#[test]
fn heavy_tails_are_flagged() {
    let mut r = rng(6);
    let mut ll = Mat::zeros(400, 2);
    for d in 0..400 {
        ll[(d, 0)] = -0.1
            * ({
                let z: f64 = StandardNormal.sample(&mut r);
                z
            })
            .abs();
        // Ratios exp(3 z²) with standard normal z have tail shape well above 0.7.
        let z: f64 = StandardNormal.sample(&mut r);
        ll[(d, 1)] = -3.0 * z * z;
    }
    let l = loo_ic(&ll).unwrap();
    assert!(l.pareto_k[0] < 0.5, "{:?}", l.pareto_k);
    assert!(l.pareto_k[1] > PARETO_K_BAD, "{:?}", l.pareto_k);
    assert_eq!(l.flagged, vec![1]);
}

#[test]
fn gpd_fit_recovers_shape() {
    let mut r = rng(7);
    let (k, sigma) = (0.3, 2.0);
    let mut x: Vec<f64> = (0..4000)
        .map(|_| {
            let u: f64 = r.random();
            sigma * ((1.0 - u).powf(-k) - 1.0) / k
        })
        .collect();
    x.sort_by(f64::total_cmp);
    let (kh, sh) = gpd_fit(&x);
    assert!((kh - k).abs() < 0.07, "{kh}");
    assert!((sh / sigma - 1.0).abs() < 0.1, "{sh}");
}

#[test]
fn summary_examples() {
    let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.mean, 2.5);
    assert_eq!(s.q50, 2.5);
    let c = summarize(&[7.0; 10]);
    assert_eq!(c.sd, 0.0);
    assert!(c.q2_5 == 7.0 && c.q50 == 7.0 && c.q97_5 == 7.0);
    let z = normals(10_000, 0.0, &mut rng(8));
    assert!((summarize(&z).q2_5 + 1.96).abs() < 0.08);
}

#[test]
fn spectral_radius_examples() {
    assert!((spectral_radius(&Mat::diag(&[0.5, -0.7])) - 0.7).abs() < 1e-12);
    assert!(spectral_radius(&Mat::from_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap()) < 1e-8);
    // Rotation by 90 degrees scaled by 0.6 has complex eigenvalues ±0.6i.
    let rot = Mat::from_rows(&[[0.0, -0.6], [0.6, 0.0]]).unwrap();
    assert!((spectral_radius(&rot) - 0.6).abs() < 1e-12);
}

/// Roots of the monic cubic `λ³ + a λ² + b λ + c` by Durand–Kerner iteration.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex<f64>> {
    let p = |z: Complex<f64>| ((z + a) * z + b) * z + c;
    let seed = Complex::new(0.4, 0.9);
    let mut r = vec![Complex::new(1.0, 0.0), seed, seed * seed];
    for _ in 0..500 {
        for i in 0..3 {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= r[i] - r[j];
                }
            }
            let step = p(r[i]) / den;
            r[i] -= step;
        }
    }
    r
}

#[test]
fn spectral_radius_matches_characteristic_polynomial() {
    let mut r = rng(9);
    for _ in 0..200 {
        let m = Mat::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)] + m[(1, 1)] * m[(2, 2)]
            - m[(1, 2)] * m[(2, 1)];
        let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
        let want = cubic_roots(-tr, minors, -det).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((spectral_radius(&m) - want).abs() < 1e-8);
    }
}

fn diag_params(model: &Model, a: &[f64], th1: f64, th2: f64) -> ParameterSet {
    let s = a.len();
    ParameterSet {
        a: a.to_vec(),
        beta: Mat::zeros(model.layout().n_cov, s),
        phi: Mat::zeros(s, s),
        theta1: vec![th1; s],
        theta2: vec![th2; s],
        sigma: None,
        y_missing: vec![50.0; model.data().n_missing()],
    }
}

#[test]
fn pointwise_counts_points() {
    let data = dataset(2, 3, 0.0, 1);
    let m = Model::new(ModelSpec::new(Variant::Varch), data).unwrap();
    assert_eq!(likelihood_points(&m).len(), 4);
    let p = diag_params(&m, &[1.0, 2.0], 1.0, 0.1);
    let ll = pointwise_loglik(&draws_from(&m, &[p.clone(), p]), &m).unwrap();
    assert_eq!((ll.rows(), ll.cols()), (2, 4));
}

#[test]
fn pointwise_var_iw_marginalizes_missing_coordinate() {
    let data = dataset(2, 4, 0.0, 2).with_missing(&[(2, 1)]);
    let m = Model::new(ModelSpec::new(Variant::VarIw), data.clone()).unwrap();
    let sigma = SpdMatrix::new(Mat::from_rows(&[[2.0, 0.8], [0.8, 1.5]]).unwrap()).unwrap();
    let p = ParameterSet {
        a: vec![3.0, 4.0],
        beta: Mat::zeros(3, 2),
        phi: Mat::from_rows(&[[0.3, 0.1], [0.0, 0.2]]).unwrap(),
        theta1: vec![],
        theta2: vec![],
        sigma: Some(sigma),
        y_missing: vec![6.0],
    };
    let ll = pointwise_loglik(&draws_from(&m, &[p.clone(), p.clone()]), &m).unwrap();
    assert_eq!(ll.cols(), 3);
    // t = 2 (0-based) has only site 0 observed.
    let u1 = data.y()[(1, 0)] - 3.0;
    let u2 = data.y()[(1, 1)] - 4.0;
    let mean0 = 3.0 + 0.3 * u1 + 0.1 * u2;
    let want = Normal::new(mean0, 2f64.sqrt()).unwrap().ln_pdf(data.y()[(2, 0)]);
    assert!((ll[(0, 1)] - want).abs() < 1e-12);
}

#[test]
fn pointwise_matches_slow_oracle() {
    let data = dataset(2, 6, 0.15, 3);
    let mut r = rng(10);
    for variant in [Variant::Arch, Variant::Varch, Variant::Varich] {
        let m = Model::new(ModelSpec::new(variant), data.clone()).unwrap();
        let p = m.unpack(&random_point(m.dim(), &mut r)).unwrap();
        let ll = pointwise_loglik(&draws_from(&m, &[p.clone(), p.clone()]), &m).unwrap();
        let y = bvarch::model::complete_data(&p, &data).unwrap();
        let fixed = |t: usize, s: usize| p.a[s] + (0..3).map(|j| data.covariates()[j].values[(t, s)] * p.beta[(j, s)]).sum::<f64>();
        let res = |t: usize, s: usize| y[(t, s)] - fixed(t, s);
        let mut col = 0;
        for t in variant.first_time()..6 {
            for s in 0..2 {
                if data.is_missing(t, s) {
                    continue;
                }
                let lat: f64 = (0..2)
                    .map(|k| {
                        if variant == Variant::Varich {
                            p.phi[(s, k)] * (res(t - 1, k) - res(t - 2, k))
                        } else {
                            p.phi[(s, k)] * res(t - 1, k)
                        }
                    })
                    .sum::<f64>()
                    + if variant == Variant::Varich { res(t - 1, s) } else { 0.0 };
                let var = p.theta1[s] + p.theta2[s] * y[(t - 1, s)].powi(2);
                let want = Normal::new(fixed(t, s) + lat, var.sqrt()).unwrap().ln_pdf(y[(t, s)]);
                assert!((ll[(1, col)] - want).abs() < 1e-10);
                col += 1;
            }
        }
        assert_eq!(col, ll.cols());
    }
}

#[test]
fn pointwise_rejects_foreign_draws() {
    let data = dataset(2, 6, 0.0, 3);
    let arch = Model::new(ModelSpec::new(Variant::Arch), data.clone()).unwrap();
    let varch = Model::new(ModelSpec::new(Variant::Varch), data).unwrap();
    let p = diag_params(&arch, &[1.0, 1.0], 1.0, 0.1);
    assert!(pointwise_loglik(&draws_from(&arch, &[p.clone(), p]), &varch).is_err());
}

fn constant_data(n: usize) -> Dataset {
    dataset(2, n, 0.0, 11)
}

#[test]
fn forecast_mean_is_intercept_without_dynamics() {
    let data = constant_data(8);
    let spec = ModelSpec::with_roles(Variant::Varch, vec![]);
    let bare = Dataset::new(
        (0..8).map(|t| (0..2).map(|s| data.value(t, s)).collect()).collect(),
        vec![],
        data.site_ids().to_vec(),
        data.site_groups().to_vec(),
        data.dates().to_vec(),
    )
    .unwrap();
    let m = Model::new(spec, bare).unwrap();
    let th1 = 0.04;
    let p = diag_params(&m, &[2.0, 3.0], th1, 0.0);
    let cells = forecast_from_params(&[p], &m, 1).unwrap();
    assert_eq!(cells.len(), 7 * 2);
    for c in &cells {
        assert_eq!(c.mean, [2.0, 3.0][c.site]);
        let width = c.q97_5 - c.q2_5;
        let want = 2.0 * 1.959_963_985 * th1.sqrt();
        assert!((width / want - 1.0).abs() < 0.06, "{width} vs {want}");
    }
}

#[test]
fn forecast_is_deterministic_and_seed_dependent() {
    let data = dataset(2, 10, 0.1, 12);
    let m = Model::new(ModelSpec::new(Variant::Varich), data).unwrap();
    let mut r = rng(13);
    let ps: Vec<_> = (0..5).map(|_| m.unpack(&random_point(m.dim(), &mut r)).unwrap()).collect();
    let d = draws_from(&m, &ps);
    let a = one_step_forecast(&d, &m, 7).unwrap();
    let b = one_step_forecast(&d, &m, 7).unwrap();
    let c = one_step_forecast(&d, &m, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.iter().all(|x| x.q2_5 <= x.q50 && x.q50 <= x.q97_5));
    assert_eq!(a[0].t, 2);
}

fn cell(t: usize, site: usize, lo: f64, hi: f64) -> ForecastCell {
    ForecastCell {
        t,
        date: chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        site,
        site_id: String::new(),
        mean: 0.5 * (lo + hi),
        sd: 1.0,
        q2_5: lo,
        q50: 0.5 * (lo + hi),
        q97_5: hi,
        observed: None,
    }
}

#[test]
fn coverage_examples() {
    let data = dataset(2, 5, 0.0, 14).with_missing(&[(3, 1)]);
    let inside: Vec<_> = (1..5)
        .flat_map(|t| (0..2).map(move |s| (t, s)))
        .map(|(t, s)| {
            let y = data.value(t, s).unwrap_or(0.0);
            cell(t, s, y - 1.0, y + 1.0)
        })
        .collect();
    assert_eq!(predictive_coverage(&inside, &data), 1.0);
    let outside: Vec<_> = inside.iter().map(|c| cell(c.t, c.site, c.q97_5 + 1.0, c.q97_5 + 2.0)).collect();
    assert_eq!(predictive_coverage(&outside, &data), 0.0);
    let mut mixed = inside.clone();
    mixed[0] = outside[0].clone();
    let cov = predictive_coverage(&mixed, &data);
    assert!((cov - 6.0 / 7.0).abs() < 1e-15);
    mixed.reverse();
    assert_eq!(predictive_coverage(&mixed, &data), cov);
}

#[test]
fn report_from_short_fit() {
    let data = dataset(2, 40, 0.05, 15);
    let m = Model::new(ModelSpec::new(Variant::Varch), data).unwrap();
    let cfg = SamplerConfig { n_iter: 300, n_warmup: 150, n_chains: 2, seed: 3, ..Default::default() };
    let draws = run_chains(&m, &cfg).unwrap();
    let rep = build_report(&draws, &m, 1).unwrap();
    assert_eq!(rep.parameters.len(), m.dim());
    assert!(rep.rhat_min.unwrap() > 0.95 && rep.rhat_max.unwrap() < 1.2);
    assert!((0.0..=1.0).contains(&rep.coverage));
    assert!(rep.waic.waic.is_finite() && rep.looic.looic.is_finite());
    assert_eq!(rep.phi_mean.len(), 2);
    let mut json = vec![];
    rep.write_json(&mut json).unwrap();
    let back: bvarch::inference::FitReport = serde_json::from_slice(&json).unwrap();
    assert_eq!(back.variant, Variant::Varch);
    let mut csv = vec![];
    rep.write_summary_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("parameter,mean,sd,q2.5,q50,q97.5,rhat,ess\n"));
    assert!(text.contains("\nA[1],"));
    let mut csv = vec![];
    rep.write_forecast_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 39 * 2);
}
