use crate::scalar::Real;

/// Nesterov dual averaging of the log step size toward a target acceptance rate.
#[derive(Clone, Debug)]
pub struct DualAveraging {
    target: f64,
    mu: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
    log_step: f64,
}

const GAMMA: f64 = 0.05;
const T0: f64 = 10.0;
const KAPPA: f64 = 0.75;

impl DualAveraging {
    pub fn new(initial_step: f64, target: f64) -> Self {
        DualAveraging { target, mu: (10.0 * initial_step).ln(), counter: 0.0, s_bar: 0.0, x_bar: 0.0, log_step: initial_step.ln() }
    }

    pub fn step_size(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }

    pub fn update(&mut self, accept_stat: f64) {
        let a = if accept_stat.is_finite() { accept_stat.clamp(0.0, 1.0) } else { 0.0 };
        self.counter += 1.0;
        let eta = 1.0 / (self.counter + T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / GAMMA;
        let w = self.counter.powf(-KAPPA);
        self.x_bar = (1.0 - w) * self.x_bar + w * x;
        self.log_step = x;
    }
}

/// Welford running variance for the diagonal metric.
#[derive(Clone, Debug)]
pub struct RunningVariance {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    pub fn new(dim: usize) -> Self {
        RunningVariance { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn push<F: Real>(&mut self, x: &[F]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let v = v.f64();
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Variance shrunk toward `1e-3`, as used for the inverse metric.
    pub fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|&s| {
                let var = if self.n > 1 { s / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Slow metric windows `[start, end)` within `n_warmup` iterations.
///
/// An initial fast buffer (15%) and a terminal fast buffer (10%) tune the
/// step size only. The slow region between them is cut into windows that
/// double from 25 iterations, the last one absorbing any remainder. Each
/// window restarts the variance estimate so early transients are forgotten.
/// Fewer than 20 warmup iterations give no windows.
pub fn metric_windows(n_warmup: usize) -> Vec<(usize, usize)> {
    if n_warmup < 20 {
        return Vec::new();
    }
    let init = n_warmup * 15 / 100;
    let end = n_warmup - n_warmup / 10;
    let mut out = Vec::new();
    let mut start = init;
    let mut len = 25.min(end - init);
    while start < end {
        let mut stop = start + len;
        if stop + 2 * len > end {
            stop = end;
        }
        out.push((start, stop));
        start = stop;
        len *= 2;
    }
    out
}
