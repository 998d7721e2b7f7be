//! Rotationally symmetric α-stable increments with characteristic function `exp(−dt|ξ|^α)`.

use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::{arg_err, Result};
use crate::math::{cos, pow, sin, sqrt, tan};

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&alpha) {
        return arg_err(alloc::format!("stable index α = {alpha} must lie in [1, 2]"));
    }
    Ok(())
}

/// Standard symmetric stable variable in one dimension (Chambers–Mallows–Stuck),
/// characteristic function `exp(−|ξ|^α)`.
#[inline]
pub(crate) fn standard_symmetric<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let g: f64 = rng.sample(StandardNormal);
        return core::f64::consts::SQRT_2 * g;
    }
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return tan(v);
    }
    let w: f64 = rng.sample(Exp1);
    sin(alpha * v) / pow(cos(v), 1.0 / alpha) * pow(cos(v - alpha * v) / w, (1.0 - alpha) / alpha)
}

/// Positive `β`-stable variable with Laplace transform `exp(−s^β)`, `β ∈ (0, 1)` (Kanter).
#[inline]
fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let u = PI * u;
    let e: f64 = rng.sample(Exp1);
    let a = sin(beta * u) / pow(sin(u), 1.0 / beta);
    let b = pow(sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    a * b
}

/// Writes one standard increment (`dt = 1`) into `out`. For `d > 1` the increment is
/// sub-Gaussian: `√A · G` with `G ~ N(0, 2I)` and `A` positive `(α/2)`-stable, whose
/// characteristic function is `exp(−|ξ|^α)` and is rotation invariant.
#[inline]
pub(crate) fn standard_increment<R: Rng + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = standard_symmetric(alpha, rng);
        return;
    }
    let scale = if alpha == 2.0 {
        core::f64::consts::SQRT_2
    } else {
        sqrt(2.0 * positive_stable(0.5 * alpha, rng))
    };
    for o in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *o = scale * g;
    }
}

/// An increment `Z_{t+dt} − Z_t` of the symmetric α-stable process in `ℝ^{out.len()}`.
pub fn sample_stable_increment<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R, out: &mut [f64]) -> Result<()> {
    check_alpha(alpha)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return arg_err("stable increment needs dt > 0");
    }
    standard_increment(alpha, rng, out);
    let s = pow(dt, 1.0 / alpha);
    for o in out.iter_mut() {
        *o *= s;
    }
    Ok(())
}

/// Density of the one-dimensional symmetric Cauchy law with scale `t` (`α = 1`).
pub fn cauchy_density(t: f64, z: f64) -> f64 {
    t / (PI * (t * t + z * z))
}

pub fn cauchy_cdf(t: f64, z: f64) -> f64 {
    0.5 + libm::atan(z / t) / PI
}
