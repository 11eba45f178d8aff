//! Synthetic datasets from any model variant, and a demo design shaped like a
//! seven-buoy dredging survey.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    conditional_mean, conditional_variance, daily_dates, Covariate, Dataset, Layout, ModelSpec, ParameterSet, SiteGroup, Variant,
};
use crate::stats::{Mat, SpdMatrix, Support};

/// Covariates and site metadata for a simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub covariates: Vec<Covariate<f64>>,
    pub site_ids: Vec<String>,
    pub site_groups: Vec<SiteGroup>,
    pub start: NaiveDate,
}

impl Design {
    pub fn n_time(&self) -> usize {
        self.covariates.first().map_or(0, |c| c.values.rows())
    }

    pub fn n_sites(&self) -> usize {
        self.site_ids.len()
    }
}

// Streams keep wind, masks and innovations independent under one seed.
const WIND_STREAM: u64 = 1;
const MISSING_STREAM: u64 = 2;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Runs the model generatively for `n_time` days.
///
/// The first row (first two for `VARICH`) is drawn from
/// `N(A + Σⱼ Xⱼ ∘ βⱼ, diag(θ₁))`, using `diag(Σ)` for `VAR_IW`; later rows follow
/// the conditional mean and variance exactly. The result is fully observed.
/// `θ₂ = 0` is accepted here.
pub fn simulate(spec: &ModelSpec, params: &ParameterSet, n_time: usize, design: &Design, seed: u64) -> Result<Dataset> {
    let n_s = design.n_sites();
    let n_cov = design.covariates.len();
    if design.site_groups.len() != n_s {
        return Err(Error::LengthMismatch { expected: n_s, actual: design.site_groups.len() });
    }
    for c in &design.covariates {
        if c.values.rows() != n_time || c.values.cols() != n_s {
            return Err(Error::DimensionMismatch(format!(
                "covariate {} is {}x{}, expected {n_time}x{n_s}",
                c.name,
                c.values.rows(),
                c.values.cols()
            )));
        }
    }
    if n_time < 3 {
        return Err(Error::InvalidDataset(format!("need at least 3 time points, got {n_time}")));
    }
    let layout = Layout::new(spec.variant, n_s, n_cov, vec![], Support::Unbounded);
    // θ₂ = 0 (no ARCH effect) is a valid generative setting although the
    // sampler's open-interval transform excludes it.
    if params.theta2.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::ConstraintViolation("theta2 must lie in [0, 1)".into()));
    }
    let mut open = params.clone();
    open.theta2.iter_mut().filter(|x| **x == 0.0).for_each(|x| *x = 0.5);
    layout.check(&open)?;
    if !params.y_missing.is_empty() {
        return Err(Error::ConstraintViolation("simulation parameters carry no imputed values".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Mat::zeros(n_time, n_s);
    let t0 = spec.variant.first_time();
    let init_var: Vec<f64> = match &params.sigma {
        Some(s) if spec.variant == Variant::VarIw => s.matrix().diagonal(),
        _ => params.theta1.clone(),
    };
    for t in 0..t0 {
        for s in 0..n_s {
            let xb: f64 = design.covariates.iter().enumerate().map(|(j, c)| c.values[(t, s)] * params.beta[(j, s)]).sum();
            y[(t, s)] = params.a[s] + xb + init_var[s].sqrt() * normal(&mut rng);
        }
    }
    let mut z = vec![0.0; n_s];
    for t in t0..n_time {
        let m = conditional_mean(params, spec, &y, &design.covariates, t)?;
        let v: SpdMatrix<f64> = conditional_variance(params, spec, &y, t)?;
        let l = v.factor().matrix();
        for zi in z.iter_mut() {
            *zi = normal(&mut rng);
        }
        for s in 0..n_s {
            let mut x = m[s];
            for k in 0..=s {
                x += l[(s, k)] * z[k];
            }
            if !x.is_finite() {
                return Err(Error::ConstraintViolation(format!("simulation diverged at t = {t}")));
            }
            y[(t, s)] = x;
        }
    }
    let rows = (0..n_time).map(|t| y.row(t).iter().map(|&v| Some(v)).collect()).collect();
    Dataset::new(rows, design.covariates.clone(), design.site_ids.clone(), design.site_groups.clone(), daily_dates(design.start, n_time))
}

/// A masked stretch of consecutive days at one site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub site: usize,
    /// 0-based first masked day.
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MissingScheme {
    /// Each cell masked independently with probability `p ∈ [0, 1)`.
    Random { p: f64 },
    /// Exactly the listed blocks.
    Blocks { blocks: Vec<Block> },
    /// `count` blocks of `len` days at uniformly chosen sites and start days.
    RandomBlocks { count: usize, len: usize },
}

/// Masks responses according to `scheme`; covariates are untouched.
pub fn inject_missing(data: &Dataset, scheme: &MissingScheme, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MISSING_STREAM);
    let (n_t, n_s) = (data.n_time(), data.n_sites());
    let mut cells = Vec::new();
    let push_block = |b: &Block, cells: &mut Vec<(usize, usize)>| -> Result<()> {
        if b.site >= n_s || b.start + b.len > n_t {
            return Err(Error::InvalidConfig(format!("block {b:?} outside the {n_t}x{n_s} grid")));
        }
        cells.extend((b.start..b.start + b.len).map(|t| (t, b.site)));
        Ok(())
    };
    match scheme {
        MissingScheme::Random { p } => {
            if !(0.0..1.0).contains(p) {
                return Err(Error::InvalidConfig(format!("missing fraction must lie in [0, 1), got {p}")));
            }
            for t in 0..n_t {
                for s in 0..n_s {
                    if rng.random::<f64>() < *p {
                        cells.push((t, s));
                    }
                }
            }
        }
        MissingScheme::Blocks { blocks } => {
            for b in blocks {
                push_block(b, &mut cells)?;
            }
        }
        MissingScheme::RandomBlocks { count, len } => {
            if *len == 0 || *len > n_t {
                return Err(Error::InvalidConfig(format!("block length {len} does not fit {n_t} days")));
            }
            for _ in 0..*count {
                let b = Block { site: rng.random_range(0..n_s), start: rng.random_range(0..=n_t - len), len: *len };
                push_block(&b, &mut cells)?;
            }
        }
    }
    Ok(data.with_missing(&cells))
}

/// First day of the demo design.
pub const DEMO_START: (i32, u32, u32) = (2017, 8, 31);
/// Days in the demo design.
pub const DEMO_DAYS: usize = 488;
/// Dredging campaigns as `[first, last)` day offsets from the start.
pub const DREDGING_CAMPAIGNS: [(usize, usize); 4] = [(20, 62), (120, 171), (250, 300), (390, 441)];
/// Dumping follows dredging by two days, on alternate days of each campaign.
pub const DUMPING_LAG: usize = 2;
pub const WIND_MEAN: f64 = 10.0;
pub const WIND_AR: f64 = 0.7;
/// Innovation sd of the wind series, in knots.
pub const WIND_SD: f64 = 3.0;

/// Three depths at the dump site and four buoys near the dredged channel.
pub fn demo_sites() -> (Vec<String>, Vec<SiteGroup>) {
    let ids = ["dump_surface", "dump_mid", "dump_bottom", "buoy_1", "buoy_2", "buoy_3", "buoy_4"];
    let groups = ids.iter().map(|id| if id.starts_with("dump") { SiteGroup::DumpSite } else { SiteGroup::DredgingSite }).collect();
    (ids.iter().map(|s| s.to_string()).collect(), groups)
}

/// Daily operation flags `(dredging, dumping)` of the demo schedule.
pub fn demo_operations(n_time: usize) -> Vec<(bool, bool)> {
    (0..n_time)
        .map(|t| {
            let dredge = DREDGING_CAMPAIGNS.iter().any(|&(a, b)| t >= a && t < b);
            let dump =
                DREDGING_CAMPAIGNS.iter().any(|&(a, b)| t >= a + DUMPING_LAG && t < b + DUMPING_LAG && (t - a - DUMPING_LAG) % 2 == 0);
            (dredge, dump)
        })
        .collect()
}

/// AR(1) wind speed with mean 10 knots, clipped at zero.
pub fn demo_wind(n_time: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(WIND_STREAM);
    let stationary_sd = WIND_SD / (1.0 - WIND_AR * WIND_AR).sqrt();
    let mut x = WIND_MEAN + stationary_sd * normal(&mut rng);
    (0..n_time)
        .map(|_| {
            let out = x.max(0.0);
            x = WIND_MEAN + WIND_AR * (x - WIND_MEAN) + WIND_SD * normal(&mut rng);
            out
        })
        .collect()
}

/// Covariate matrices from per-day operations and wind. Indicators are set
/// only at sites of the matching group. Order: dumping, dredging, wind.
pub fn covariates_from_schedule(ops: &[(bool, bool)], wind: &[f64], groups: &[SiteGroup]) -> Vec<Covariate<f64>> {
    let n_t = ops.len();
    let n_s = groups.len();
    let flag = |on: bool| if on { 1.0 } else { 0.0 };
    vec![
        Covariate { name: "dumping".into(), values: Mat::from_fn(n_t, n_s, |t, s| flag(ops[t].1 && groups[s] == SiteGroup::DumpSite)) },
        Covariate {
            name: "dredging".into(),
            values: Mat::from_fn(n_t, n_s, |t, s| flag(ops[t].0 && groups[s] == SiteGroup::DredgingSite)),
        },
        Covariate { name: "wind".into(), values: Mat::from_fn(n_t, n_s, |t, _| wind[t]) },
    ]
}

/// The seven-site demo design over `n_time` days.
pub fn demo_design(n_time: usize, seed: u64) -> Design {
    let (site_ids, site_groups) = demo_sites();
    let (y, m, d) = DEMO_START;
    Design {
        covariates: covariates_from_schedule(&demo_operations(n_time), &demo_wind(n_time, seed), &site_groups),
        site_ids,
        site_groups,
        start: NaiveDate::from_ymd_opt(y, m, d).expect("valid demo start"),
    }
}

/// Documented demo parameters for `variant` on the demo sites.
///
/// Dumping raises turbidity only at the dump site, dredging only at the
/// buoys, wind everywhere. `Φ` couples sites within each group.
pub fn demo_params(variant: Variant) -> ParameterSet {
    let (_, groups) = demo_sites();
    let s = groups.len();
    let dump = |i: usize| groups[i] == SiteGroup::DumpSite;
    let a = vec![4.0, 5.0, 6.5, 3.0, 3.5, 2.5, 4.0];
    let beta = Mat::from_fn(3, s, |j, i| match j {
        0 => {
            if dump(i) {
                1.5
            } else {
                0.0
            }
        }
        1 => {
            if dump(i) {
                0.0
            } else {
                2.0
            }
        }
        _ => 0.15,
    });
    let phi = Mat::from_fn(s, s, |i, k| {
        if i == k {
            if variant == Variant::Varich {
                0.3
            } else {
                0.5
            }
        } else if variant != Variant::Arch && dump(i) == dump(k) {
            0.05
        } else {
            0.0
        }
    });
    let (theta1, theta2, sigma) = if variant == Variant::VarIw {
        let m = Mat::from_fn(s, s, |i, k| {
            if i == k {
                1.0
            } else if dump(i) == dump(k) {
                0.3
            } else {
                0.0
            }
        });
        (vec![], vec![], Some(SpdMatrix::new(m).expect("demo covariance is SPD")))
    } else {
        (vec![0.8; s], vec![0.02; s], None)
    };
    ParameterSet { a, beta, phi, theta1, theta2, sigma, y_missing: vec![] }
}
