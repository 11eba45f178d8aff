use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Support of a scalar parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    Positive,
    Interval { lo: f64, hi: f64 },
    Unbounded,
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::Positive => write!(f, "(0, inf)"),
            Support::Interval { lo, hi } => write!(f, "({lo}, {hi})"),
            Support::Unbounded => write!(f, "(-inf, inf)"),
        }
    }
}

/// Result of mapping an unconstrained coordinate back to its support.
#[derive(Clone, Copy, Debug)]
pub struct Constrained<F> {
    pub value: F,
    /// `log |d value / du|`.
    pub log_jac: F,
    /// `d value / du`.
    pub dvalue: F,
    /// `d log_jac / du`.
    pub dlog_jac: F,
}

#[inline]
fn logistic<F: Real>(u: F) -> F {
    if u >= F::zero() {
        F::one() / (F::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (F::one() + e)
    }
}

/// `log σ(u)` without overflow.
#[inline]
fn ln_logistic<F: Real>(u: F) -> F {
    if u >= F::zero() {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

impl Support {
    pub fn contains<F: Real>(&self, x: F) -> bool {
        match *self {
            Support::Positive => x > F::zero() && x.is_finite(),
            Support::Interval { lo, hi } => x > F::c(lo) && x < F::c(hi),
            Support::Unbounded => x.is_finite(),
        }
    }

    /// Maps `x` to the real line and returns `(u, log |dx/du|)`.
    pub fn unconstrain<F: Real>(&self, x: F) -> Result<(F, F)> {
        if !self.contains(x) {
            return Err(Error::OutOfSupport { value: x.f64(), support: self.to_string() });
        }
        let u = match *self {
            Support::Positive => x.ln(),
            Support::Interval { lo, hi } => {
                let (lo, hi) = (F::c(lo), F::c(hi));
                let p = (x - lo) / (hi - lo);
                p.ln() - (-p).ln_1p()
            }
            Support::Unbounded => x,
        };
        Ok((u, self.constrain(u).log_jac))
    }

    pub fn constrain<F: Real>(&self, u: F) -> Constrained<F> {
        match *self {
            Support::Positive => {
                let v = u.exp();
                Constrained { value: v, log_jac: u, dvalue: v, dlog_jac: F::one() }
            }
            Support::Interval { lo, hi } => {
                let (lo, hi) = (F::c(lo), F::c(hi));
                let width = hi - lo;
                let s = logistic(u);
                let sc = logistic(-u);
                Constrained {
                    value: lo + width * s,
                    log_jac: width.ln() + ln_logistic(u) + ln_logistic(-u),
                    dvalue: width * s * sc,
                    dlog_jac: sc - s,
                }
            }
            Support::Unbounded => Constrained { value: u, log_jac: F::zero(), dvalue: F::one(), dlog_jac: F::zero() },
        }
    }
}
