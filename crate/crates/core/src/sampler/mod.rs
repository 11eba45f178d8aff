//! Multi-chain no-U-turn Hamiltonian sampler with step-size and diagonal
//! metric adaptation during warmup.

mod adapt;
mod hmc;
mod nuts;

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adapt::{metric_windows, DualAveraging, RunningVariance};
pub use hmc::{leapfrog, leapfrog_step, Point, Trajectory, MAX_ENERGY_ERROR};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;

/// Log density with gradient over an unconstrained space.
pub trait LogDensity<F: Real>: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density.
    fn logp_and_grad(&self, position: &[F], grad: &mut [F]) -> Result<F>;

    fn param_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("x[{i}]")).collect()
    }

    /// Constrained view of a position, same length as `param_names`.
    fn constrain(&self, position: &[F]) -> Vec<F> {
        position.to_vec()
    }

    /// Random starting position; uniform on `[-2, 2]` per coordinate.
    fn initial_position(&self, rng: &mut ChaCha8Rng) -> Vec<F> {
        (0..self.dim()).map(|_| F::c(rng.random_range(-INIT_RADIUS..INIT_RADIUS))).collect()
    }
}

impl<F: Real> LogDensity<F> for Model<F> {
    fn dim(&self) -> usize {
        Model::dim(self)
    }

    fn logp_and_grad(&self, position: &[F], grad: &mut [F]) -> Result<F> {
        Model::logp_and_grad(self, position, grad)
    }

    fn param_names(&self) -> Vec<String> {
        self.parameter_names()
    }

    fn constrain(&self, position: &[F]) -> Vec<F> {
        match self.unpack(position) {
            Ok(p) => self.layout().constrained_vector(&p),
            Err(_) => vec![F::nan(); position.len()],
        }
    }

    fn initial_position(&self, rng: &mut ChaCha8Rng) -> Vec<F> {
        match crate::model::initial_position(self.layout(), self.data(), rng) {
            Ok(q) => q,
            Err(_) => (0..self.dim()).map(|_| F::c(rng.random_range(-INIT_RADIUS..INIT_RADIUS))).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_chains: usize,
    /// Total iterations per chain, warmup included.
    pub n_iter: usize,
    pub n_warmup: usize,
    pub target_accept: f64,
    pub max_leapfrog_steps: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_chains: 4, n_iter: 1000, n_warmup: 200, target_accept: 0.8, max_leapfrog_steps: 1024, seed: 1 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_iter == 0 || self.max_leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("sampler counts must be positive".into()));
        }
        if self.n_warmup >= self.n_iter {
            return Err(Error::InvalidConfig(format!("n_warmup ({}) must be smaller than n_iter ({})", self.n_warmup, self.n_iter)));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig("target_accept must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn n_kept(&self) -> usize {
        self.n_iter - self.n_warmup
    }

    fn max_depth(&self) -> usize {
        // 2^depth - 1 leapfrog steps at most.
        (usize::BITS - 1 - (self.max_leapfrog_steps + 1).leading_zeros()) as usize
    }
}

/// Per-chain sampler telemetry (post-warmup unless stated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
    pub mean_accept_stat: f64,
    pub mean_tree_depth: f64,
    pub mean_leapfrog_steps: f64,
    pub inv_metric: Vec<f64>,
}

/// Kept draws indexed `[chain][iteration][coordinate]`.
#[derive(Clone, Debug)]
pub struct PosteriorDraws<F = f64> {
    pub names: Vec<String>,
    pub constrained: Vec<Vec<Vec<F>>>,
    /// Empty when the draws were loaded from a constrained-only export.
    pub unconstrained: Vec<Vec<Vec<F>>>,
    pub stats: Vec<ChainStats>,
}

impl<F: Real> PosteriorDraws<F> {
    pub fn n_chains(&self) -> usize {
        self.constrained.len()
    }

    pub fn n_kept(&self) -> usize {
        self.constrained.first().map_or(0, |c| c.len())
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Draws of coordinate `k`, one sequence per chain.
    pub fn chains_of(&self, k: usize) -> Vec<Vec<f64>> {
        self.constrained.iter().map(|c| c.iter().map(|d| d[k].f64()).collect()).collect()
    }

    /// All constrained draws pooled over chains, in chain order.
    pub fn pooled(&self) -> impl Iterator<Item = &Vec<F>> {
        self.constrained.iter().flatten()
    }

    pub fn total_divergences(&self) -> usize {
        self.stats.iter().map(|s| s.divergences).sum()
    }

    /// CSV with `chain,iteration` (1-based) followed by the named constrained coordinates.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (c, chain) in self.constrained.iter().enumerate() {
            for (i, draw) in chain.iter().enumerate() {
                let mut rec = vec![(c + 1).to_string(), (i + 1).to_string()];
                rec.extend(draw.iter().map(|v| v.f64().to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "chain" || &header[1] != "iteration" {
            return Err(Error::ParseError { row: 1, reason: crate::error::RowFault::MissingField });
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut chains: Vec<Vec<Vec<F>>> = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |reason| Error::ParseError { row: row + 2, reason };
            let chain: usize = rec[0].parse().map_err(|_| bad(crate::error::RowFault::NonNumeric))?;
            if chain == 0 {
                return Err(bad(crate::error::RowFault::NonNumeric));
            }
            let vals = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>().map(F::c).map_err(|_| bad(crate::error::RowFault::NonNumeric)))
                .collect::<Result<Vec<F>>>()?;
            if vals.len() != names.len() {
                return Err(bad(crate::error::RowFault::MissingField));
            }
            while chains.len() < chain {
                chains.push(Vec::new());
            }
            chains[chain - 1].push(vals);
        }
        if chains.is_empty() {
            return Err(Error::EmptyFile);
        }
        Ok(PosteriorDraws { names, constrained: chains, unconstrained: Vec::new(), stats: Vec::new() })
    }
}

/// Root RNG for chain `chain`: same seed, distinct ChaCha stream.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

const INIT_ATTEMPTS: usize = 100;
const INIT_RADIUS: f64 = 2.0;

struct ChainOutput<F> {
    unconstrained: Vec<Vec<F>>,
    constrained: Vec<Vec<F>>,
    stats: ChainStats,
}

fn initial_point<F: Real, T: LogDensity<F> + ?Sized>(target: &T, rng: &mut ChaCha8Rng) -> Result<Point<F>> {
    let d = target.dim();
    for _ in 0..INIT_ATTEMPTS {
        let q = target.initial_position(rng);
        let z = Point::new(target, q, vec![F::zero(); d]);
        if z.logp.is_finite() {
            return Ok(z);
        }
    }
    Err(Error::AllInitializationsFailed { attempts: INIT_ATTEMPTS })
}

fn run_chain<F: Real, T: LogDensity<F> + ?Sized>(target: &T, cfg: &SamplerConfig, chain: usize) -> Result<ChainOutput<F>> {
    let mut rng = chain_rng(cfg.seed, chain as u64);
    let d = target.dim();
    let mut z = initial_point(target, &mut rng)?;
    let mut inv_metric = vec![F::one(); d];
    let max_depth = cfg.max_depth();

    // Warmup: step size adapts throughout; the diagonal metric is re-estimated
    // at the end of each slow window, and the step size search restarts under it.
    let w = cfg.n_warmup;
    let windows = metric_windows(w);
    let mut step = find_step(target, &z, &inv_metric, 1.0, &mut rng);
    let mut da = DualAveraging::new(step, cfg.target_accept);
    let mut var = RunningVariance::new(d);

    let n_kept = cfg.n_kept();
    let mut unconstrained = Vec::with_capacity(n_kept);
    let mut constrained = Vec::with_capacity(n_kept);
    let mut warmup_divergences = 0;
    let mut divergences = 0;
    let (mut acc_sum, mut depth_sum, mut leap_sum) = (0.0, 0.0, 0.0);

    for it in 0..cfg.n_iter {
        let (next, st) = nuts::transition(target, &z, &inv_metric, F::c(step), max_depth, &mut rng);
        z = next;
        if it < w {
            warmup_divergences += st.divergent as usize;
            da.update(st.accept_stat);
            step = da.step_size();
            if let Some(&(_, end)) = windows.iter().find(|&&(a, b)| it >= a && it < b) {
                var.push(&z.position);
                if it + 1 == end && var.count() >= 10 {
                    inv_metric = var.regularized().into_iter().map(F::c).collect();
                    var = RunningVariance::new(d);
                    step = find_step(target, &z, &inv_metric, step, &mut rng);
                    da = DualAveraging::new(step, cfg.target_accept);
                }
            }
            if it + 1 == w {
                step = da.final_step_size();
            }
        } else {
            divergences += st.divergent as usize;
            acc_sum += st.accept_stat;
            depth_sum += st.depth as f64;
            leap_sum += st.n_leapfrog as f64;
            constrained.push(target.constrain(&z.position));
            unconstrained.push(z.position.clone());
        }
    }
    let k = n_kept as f64;
    Ok(ChainOutput {
        unconstrained,
        constrained,
        stats: ChainStats {
            divergences,
            warmup_divergences,
            step_size: step,
            mean_accept_stat: acc_sum / k,
            mean_tree_depth: depth_sum / k,
            mean_leapfrog_steps: leap_sum / k,
            inv_metric: inv_metric.iter().map(|m| m.f64()).collect(),
        },
    })
}

fn find_step<F: Real, T: LogDensity<F> + ?Sized>(target: &T, z: &Point<F>, inv_metric: &[F], init: f64, rng: &mut ChaCha8Rng) -> f64 {
    nuts::find_reasonable_step(target, z, inv_metric, init, rng)
}

/// Runs `n_chains` independent chains in parallel. Output is identical for
/// identical `(target, config)` regardless of thread scheduling.
pub fn run_chains<F: Real, T: LogDensity<F> + ?Sized>(target: &T, config: &SamplerConfig) -> Result<PosteriorDraws<F>> {
    config.validate()?;
    let outputs = (0..config.n_chains).into_par_iter().map(|c| run_chain(target, config, c)).collect::<Result<Vec<_>>>()?;
    let mut draws = PosteriorDraws {
        names: target.param_names(),
        constrained: Vec::with_capacity(outputs.len()),
        unconstrained: Vec::with_capacity(outputs.len()),
        stats: Vec::with_capacity(outputs.len()),
    };
    for o in outputs {
        draws.constrained.push(o.constrained);
        draws.unconstrained.push(o.unconstrained);
        draws.stats.push(o.stats);
    }
    Ok(draws)
}
