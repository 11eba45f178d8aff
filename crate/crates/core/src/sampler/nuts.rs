use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::sampler::hmc::{leapfrog_step, Point, MAX_ENERGY_ERROR};
use crate::sampler::LogDensity;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct TransitionStats {
    pub accept_stat: f64,
    pub n_leapfrog: usize,
    pub depth: usize,
    pub divergent: bool,
}

struct Tree<F> {
    left: Point<F>,
    right: Point<F>,
    proposal: Point<F>,
    rho: Vec<F>,
    log_weight: F,
}

fn log_add_exp<F: Real>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Builder<'a, F: Real, T: ?Sized, R> {
    target: &'a T,
    inv_metric: &'a [F],
    step: F,
    h0: F,
    rng: &'a mut R,
    n_leapfrog: usize,
    sum_accept: f64,
    divergent: bool,
}

impl<F: Real, T: LogDensity<F> + ?Sized, R: Rng> Builder<'_, F, T, R> {
    /// No-U-turn check between two trajectory ends given the summed momentum between them.
    fn persists(&self, minus: &Point<F>, plus: &Point<F>, rho: &[F]) -> bool {
        let dot = |z: &Point<F>| -> F { z.momentum.iter().zip(self.inv_metric).zip(rho).map(|((&p, &m), &r)| p * m * r).sum() };
        dot(minus) > F::zero() && dot(plus) > F::zero()
    }

    /// Joins two adjacent trees (`left` earlier in trajectory time); `None`
    /// when the joined trajectory turns back on itself. With `resample`, the
    /// proposal comes from the newer tree with probability `w_new / w_total`.
    fn merge(&mut self, left: Tree<F>, right: Tree<F>, fresh_is_right: bool, resample: bool) -> Option<Tree<F>> {
        let log_weight = log_add_exp(left.log_weight, right.log_weight);
        let fresh_w = if fresh_is_right { right.log_weight } else { left.log_weight };
        let take_fresh = resample && {
            let threshold = fresh_w - log_weight;
            threshold >= F::zero() || self.rng.random::<f64>() < threshold.f64().exp()
        };

        let rho: Vec<F> = left.rho.iter().zip(&right.rho).map(|(&a, &b)| a + b).collect();
        let mut ok = self.persists(&left.left, &right.right, &rho);
        if ok {
            let ext: Vec<F> = left.rho.iter().zip(&right.left.momentum).map(|(&a, &b)| a + b).collect();
            ok = self.persists(&left.left, &right.left, &ext);
        }
        if ok {
            let ext: Vec<F> = right.rho.iter().zip(&left.right.momentum).map(|(&a, &b)| a + b).collect();
            ok = self.persists(&left.right, &right.right, &ext);
        }
        let Tree { left: l_end, proposal: l_prop, .. } = left;
        let Tree { right: r_end, proposal: r_prop, .. } = right;
        if !ok {
            return None;
        }
        let proposal = if take_fresh == fresh_is_right { r_prop } else { l_prop };
        Some(Tree { left: l_end, right: r_end, proposal, rho, log_weight })
    }

    fn build(&mut self, from: &Point<F>, depth: usize, forward: bool) -> Option<Tree<F>> {
        if depth == 0 {
            let eps = if forward { self.step } else { -self.step };
            let z = leapfrog_step(self.target, from, eps, self.inv_metric);
            self.n_leapfrog += 1;
            let h = z.energy(self.inv_metric);
            let delta = self.h0 - h;
            self.sum_accept += if delta.f64() > 0.0 { 1.0 } else { delta.f64().exp() };
            if !(-delta <= F::c(MAX_ENERGY_ERROR)) {
                self.divergent = true;
                return None;
            }
            let rho = z.momentum.clone();
            return Some(Tree { left: z.clone(), right: z.clone(), proposal: z, rho, log_weight: delta });
        }
        let inner = self.build(from, depth - 1, forward)?;
        let edge = if forward { inner.right.clone() } else { inner.left.clone() };
        let outer = self.build(&edge, depth - 1, forward)?;
        if forward {
            self.merge(inner, outer, true, true)
        } else {
            self.merge(outer, inner, false, true)
        }
    }
}

/// One multinomial no-U-turn transition from `current` (its momentum is ignored).
pub(crate) fn transition<F: Real, T: LogDensity<F> + ?Sized, R: Rng>(
    target: &T,
    current: &Point<F>,
    inv_metric: &[F],
    step: F,
    max_depth: usize,
    rng: &mut R,
) -> (Point<F>, TransitionStats) {
    let momentum: Vec<F> = inv_metric
        .iter()
        .map(|&m| {
            let z: f64 = StandardNormal.sample(rng);
            F::c(z) / m.sqrt()
        })
        .collect();
    let z0 = Point { position: current.position.clone(), momentum, grad: current.grad.clone(), logp: current.logp };
    let h0 = z0.energy(inv_metric);
    let mut tree = Tree { left: z0.clone(), right: z0.clone(), proposal: z0.clone(), rho: z0.momentum.clone(), log_weight: F::zero() };
    let mut b = Builder { target, inv_metric, step, h0, rng, n_leapfrog: 0, sum_accept: 0.0, divergent: false };
    let mut depth = 0;
    let mut sample = z0;
    while depth < max_depth {
        let forward = b.rng.random::<bool>();
        let edge = if forward { tree.right.clone() } else { tree.left.clone() };
        let Some(sub) = b.build(&edge, depth, forward) else { break };
        depth += 1;
        // Biased progressive sampling between the old tree and the new subtree.
        let threshold = sub.log_weight - tree.log_weight;
        if threshold >= F::zero() || b.rng.random::<f64>() < threshold.f64().exp() {
            sample = sub.proposal.clone();
        }
        let merged = if forward { b.merge(tree, sub, true, false) } else { b.merge(sub, tree, false, false) };
        match merged {
            Some(t) => tree = t,
            None => break,
        }
    }
    let stats = TransitionStats {
        accept_stat: if b.n_leapfrog > 0 { b.sum_accept / b.n_leapfrog as f64 } else { 0.0 },
        n_leapfrog: b.n_leapfrog,
        depth,
        divergent: b.divergent,
    };
    (sample, stats)
}

/// Doubles or halves `step` until a single leapfrog step's acceptance crosses 0.8.
pub(crate) fn find_reasonable_step<F: Real, T: LogDensity<F> + ?Sized, R: Rng>(
    target: &T,
    current: &Point<F>,
    inv_metric: &[F],
    initial: f64,
    rng: &mut R,
) -> f64 {
    let log_target = 0.8f64.ln();
    let trial = |eps: f64, rng: &mut R| -> f64 {
        let momentum: Vec<F> = inv_metric
            .iter()
            .map(|&m| {
                let z: f64 = StandardNormal.sample(rng);
                F::c(z) / m.sqrt()
            })
            .collect();
        let z0 = Point { position: current.position.clone(), momentum, grad: current.grad.clone(), logp: current.logp };
        let h0 = z0.energy(inv_metric);
        let z1 = leapfrog_step(target, &z0, F::c(eps), inv_metric);
        let d = (h0 - z1.energy(inv_metric)).f64();
        if d.is_nan() {
            f64::NEG_INFINITY
        } else {
            d
        }
    };
    let mut eps = initial;
    let up = trial(eps, rng) > log_target;
    for _ in 0..100 {
        let next = if up { eps * 2.0 } else { eps * 0.5 };
        let d = trial(next, rng);
        if up && !(d > log_target) {
            break;
        }
        eps = next;
        if !up && d > log_target {
            break;
        }
        if !(1e-10..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-10, 1e7)
}
