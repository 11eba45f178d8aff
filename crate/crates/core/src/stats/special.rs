//! Special functions. Evaluated in `f64` through `libm` and cast back.

use crate::scalar::Real;

pub fn ln_gamma<F: Real>(x: F) -> F {
    F::c(libm::lgamma(x.f64()))
}

pub fn erfc<F: Real>(x: F) -> F {
    F::c(libm::erfc(x.f64()))
}

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn std_normal_cdf<F: Real>(z: F) -> F {
    F::c(0.5 * libm::erfc(-z.f64() / std::f64::consts::SQRT_2))
}

fn upper(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `ln P(Z > z)`. Past `z = 8` switches to the Mills ratio continued fraction,
/// since `erfc` runs into subnormals around `z = 38`.
pub fn ln_upper_tail(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z < 8.0 {
        return upper(z).ln();
    }
    // R(z) = 1 / (z + 1/(z + 2/(z + 3/(z + ...)))), evaluated backwards.
    let mut tail = z;
    for k in (1..=120).rev() {
        tail = z + k as f64 / tail;
    }
    let ln_phi = -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln();
    ln_phi - tail.ln()
}

/// Log of the standard normal probability of `[a, b]` (either end may be infinite).
///
/// Works on the tail closest to zero so that the subtraction never cancels.
pub fn ln_std_normal_mass<F: Real>(a: F, b: F) -> F {
    let (a, b) = (a.f64(), b.f64());
    let out = if a >= 0.0 {
        // Both bounds in the upper tail.
        let la = ln_upper_tail(a);
        let lb = ln_upper_tail(b);
        la + (-(lb - la).exp()).ln_1p()
    } else if b <= 0.0 {
        let la = ln_upper_tail(-a);
        let lb = ln_upper_tail(-b);
        lb + (-(la - lb).exp()).ln_1p()
    } else {
        (-(upper(-a) + upper(b))).ln_1p()
    };
    F::c(out)
}
