use crate::error::Result;
use crate::sampler::LogDensity;
use crate::scalar::Real;

/// Phase-space point with its cached density and gradient.
#[derive(Clone, Debug)]
pub struct Point<F> {
    pub position: Vec<F>,
    pub momentum: Vec<F>,
    pub grad: Vec<F>,
    pub logp: F,
}

impl<F: Real> Point<F> {
    pub fn new<T: LogDensity<F> + ?Sized>(target: &T, position: Vec<F>, momentum: Vec<F>) -> Self {
        let mut grad = vec![F::zero(); position.len()];
        let logp = eval(target, &position, &mut grad);
        Point { position, momentum, grad, logp }
    }

    pub fn kinetic(&self, inv_metric: &[F]) -> F {
        F::c(0.5) * self.momentum.iter().zip(inv_metric).map(|(&p, &m)| p * p * m).sum::<F>()
    }

    /// Negative log joint density of (position, momentum).
    pub fn energy(&self, inv_metric: &[F]) -> F {
        let h = -self.logp + self.kinetic(inv_metric);
        if h.is_nan() {
            F::infinity()
        } else {
            h
        }
    }

    /// Velocity `M⁻¹ p`.
    pub fn velocity(&self, inv_metric: &[F]) -> Vec<F> {
        self.momentum.iter().zip(inv_metric).map(|(&p, &m)| p * m).collect()
    }
}

/// Target evaluation that maps errors and NaN to `-∞`.
pub(crate) fn eval<F: Real, T: LogDensity<F> + ?Sized>(target: &T, q: &[F], grad: &mut [F]) -> F {
    match target.logp_and_grad(q, grad) {
        Ok(v) if v.is_finite() && grad.iter().all(|g| g.is_finite()) => v,
        _ => F::neg_infinity(),
    }
}

/// One leapfrog step of size `eps` (negative to integrate backwards).
pub fn leapfrog_step<F: Real, T: LogDensity<F> + ?Sized>(target: &T, z: &Point<F>, eps: F, inv_metric: &[F]) -> Point<F> {
    let half = F::c(0.5) * eps;
    let mut p: Vec<F> = z.momentum.iter().zip(&z.grad).map(|(&p, &g)| p + half * g).collect();
    let q: Vec<F> = z.position.iter().zip(&p).zip(inv_metric).map(|((&q, &p), &m)| q + eps * m * p).collect();
    let mut grad = vec![F::zero(); q.len()];
    let logp = eval(target, &q, &mut grad);
    if logp.is_finite() {
        for (pi, &g) in p.iter_mut().zip(&grad) {
            *pi = *pi + half * g;
        }
    }
    Point { position: q, momentum: p, grad, logp }
}

/// Outcome of [`leapfrog`].
#[derive(Clone, Debug)]
pub struct Trajectory<F> {
    pub position: Vec<F>,
    pub momentum: Vec<F>,
    /// Set when the energy error exceeded the divergence threshold.
    pub divergent: bool,
    pub energy_error: F,
}

/// Energy error above which a trajectory is declared divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;

/// Integrates Hamiltonian dynamics for `n_steps` leapfrog steps with a unit metric.
pub fn leapfrog<F: Real, T: LogDensity<F> + ?Sized>(
    target: &T,
    position: &[F],
    momentum: &[F],
    step_size: F,
    n_steps: usize,
) -> Result<Trajectory<F>> {
    let unit = vec![F::one(); position.len()];
    let mut z = Point::new(target, position.to_vec(), momentum.to_vec());
    let h0 = z.energy(&unit);
    let mut divergent = !h0.is_finite();
    for _ in 0..n_steps {
        if divergent {
            break;
        }
        z = leapfrog_step(target, &z, step_size, &unit);
        if !(z.energy(&unit) - h0 <= F::c(MAX_ENERGY_ERROR)) {
            divergent = true;
        }
    }
    let energy_error = z.energy(&unit) - h0;
    Ok(Trajectory { position: z.position, momentum: z.momentum, divergent, energy_error })
}
