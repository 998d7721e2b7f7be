//! Shared-noise coupling of two solutions with an added pulling drift on the second one,
//! and the Girsanov log-density that removes that drift.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{escaped, Driver, SdeProblem, Stepper, BLOWUP_RADIUS};
use crate::error::{arg_err, Error, Result};
use crate::linalg::{distance, dot};
use crate::math::{ceil_div, exp, expm1, sq, sqrt};
use crate::rng::path_rng;
use crate::stats::McEstimate;
use crate::MAX_DIM;

/// Coupling threshold relative to `|x − y|`.
pub const COUPLING_EPSILON: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    /// Semi-Lipschitz constant `K` used in the pulling drift.
    pub k: f64,
    pub n_pairs: usize,
    /// Nominal step; `None` means `T / 2048`.
    pub dt: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub horizon: f64,
    pub epsilon: f64,
    /// Coupling time per pair; `None` if the pair did not couple by `T`.
    pub tau: Vec<Option<f64>>,
    pub success_fraction: f64,
    /// `log R` per pair, `R = exp(−∫⟨ξ, dB⟩ − ½∫|ξ|² dt)`.
    pub log_density: Vec<f64>,
    /// Monte Carlo mean of `R` (should be 1).
    pub density: McEstimate,
    /// Observed pairs `(X, Y)` with `⟨b(X) − b(Y), X − Y⟩ > K|X − Y|²`.
    pub semi_lipschitz_violations: usize,
    pub pairs_checked: usize,
    pub warning: Option<String>,
}

/// `∫₀^T e^{−2Ks} ds`.
fn decay_integral(k: f64, horizon: f64) -> f64 {
    if k == 0.0 {
        horizon
    } else {
        -expm1(-2.0 * k * horizon) / (2.0 * k)
    }
}

/// Simulates `N` pairs `(X, Y)` from `(x, y)` driven by the same Brownian increments.
/// `Y` carries the extra drift `ξ_t = (X − Y)/|X − Y| · |x − y| e^{−Kt} / ∫₀^T e^{−2Ks} ds`
/// until `|X − Y| ≤ ε|x − y|` (or the difference changes direction), after which `Y = X`.
pub fn simulate_coupled_pair(problem: &SdeProblem, x: &[f64], y: &[f64], spec: &CouplingSpec) -> Result<CouplingStats> {
    let d = problem.dim();
    if problem.driver() != Driver::Brownian || !problem.diffusion().is_identity() {
        return arg_err("coupling requires a Brownian driver with identity diffusion");
    }
    if x.len() != d || y.len() != d {
        return arg_err("coupling start points have the wrong dimension");
    }
    if spec.n_pairs == 0 {
        return arg_err("coupling needs at least one pair");
    }
    if !(spec.k >= 0.0 && spec.k.is_finite()) {
        return arg_err("semi-Lipschitz constant K must be finite and ≥ 0");
    }
    let horizon = problem.horizon();
    let dt = spec.dt.unwrap_or_else(|| problem.default_dt());
    if !(dt > 0.0) {
        return arg_err("step dt must be positive");
    }
    let n_steps = ceil_div(horizon, dt);
    let h = horizon / n_steps as f64;
    let dist0 = distance(x, y);
    let eps = COUPLING_EPSILON * dist0;
    let norm = decay_integral(spec.k, horizon);
    let stepper = Stepper::new(problem);
    let drift = problem.drift();

    struct PairOutcome {
        tau: Option<f64>,
        log_r: f64,
        violations: usize,
        checked: usize,
        ok: bool,
    }

    let outcomes = crate::par::map_range(spec.n_pairs, |i| {
        let mut rng = path_rng(spec.seed, i as u64);
        let mut xs = [0.0; MAX_DIM];
        let mut ys = [0.0; MAX_DIM];
        xs[..d].copy_from_slice(x);
        ys[..d].copy_from_slice(y);
        let mut out = PairOutcome { tau: None, log_r: 0.0, violations: 0, checked: 0, ok: true };
        if dist0 == 0.0 {
            out.tau = Some(0.0);
            return out;
        }
        let mut dw = [0.0; MAX_DIM];
        let mut coupled = false;
        for j in 0..n_steps {
            let t = j as f64 * h;
            stepper.noise(h, &mut rng, &mut dw[..d]);
            if coupled {
                stepper.advance(t, h, &mut xs[..d], &dw[..d]);
                if escaped(&xs[..d], BLOWUP_RADIUS) {
                    out.ok = false;
                    return out;
                }
                continue;
            }
            let mut diff = [0.0; MAX_DIM];
            for k in 0..d {
                diff[k] = xs[k] - ys[k];
            }
            let r = sqrt(dot(&diff[..d], &diff[..d]));
            let mut bx = [0.0; MAX_DIM];
            let mut by = [0.0; MAX_DIM];
            drift.eval(t, &xs[..d], &mut bx[..d]);
            drift.eval(t, &ys[..d], &mut by[..d]);
            let mut inner = 0.0;
            for k in 0..d {
                inner += (bx[k] - by[k]) * diff[k];
            }
            out.checked += 1;
            if inner > (spec.k * sq(r)) * (1.0 + 1e-12) + 1e-300 {
                out.violations += 1;
            }
            let speed = dist0 * exp(-spec.k * t) / norm;
            let mut xi = [0.0; MAX_DIM];
            for k in 0..d {
                xi[k] = diff[k] / r * speed;
            }
            out.log_r += -dot(&xi[..d], &dw[..d]) - 0.5 * dot(&xi[..d], &xi[..d]) * h;
            for k in 0..d {
                xs[k] += bx[k] * h + dw[k];
                ys[k] += (by[k] + xi[k]) * h + dw[k];
            }
            if escaped(&xs[..d], BLOWUP_RADIUS) || escaped(&ys[..d], BLOWUP_RADIUS) {
                out.ok = false;
                return out;
            }
            let mut crossed = 0.0;
            let mut r2 = 0.0;
            for k in 0..d {
                let nd = xs[k] - ys[k];
                crossed += nd * diff[k];
                r2 += nd * nd;
            }
            if sqrt(r2) <= eps || crossed <= 0.0 {
                coupled = true;
                ys = xs;
                out.tau = Some(t + h);
            }
        }
        out
    });

    let failed = outcomes.iter().filter(|o| !o.ok).count();
    if failed as f64 > super::MAX_FAILURE_FRACTION * spec.n_pairs as f64 {
        return Err(Error::Simulation { failed, total: spec.n_pairs });
    }
    let kept: Vec<&PairOutcome> = outcomes.iter().filter(|o| o.ok).collect();
    let tau: Vec<Option<f64>> = kept.iter().map(|o| o.tau).collect();
    let log_density: Vec<f64> = kept.iter().map(|o| o.log_r).collect();
    let successes = tau.iter().filter(|t| t.is_some()).count();
    let violations: usize = kept.iter().map(|o| o.violations).sum();
    let checked: usize = kept.iter().map(|o| o.checked).sum();
    let warning = (violations > 0).then(|| {
        alloc::format!(
            "drift violates the semi-Lipschitz bound K = {} on {violations} of {checked} observed pairs",
            spec.k
        )
    });
    Ok(CouplingStats {
        horizon,
        epsilon: eps,
        success_fraction: successes as f64 / kept.len().max(1) as f64,
        density: McEstimate::from_samples(log_density.iter().map(|l| exp(*l))),
        tau,
        log_density,
        semi_lipschitz_violations: violations,
        pairs_checked: checked,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CoefficientField;

    fn spec(n: usize) -> CouplingSpec {
        CouplingSpec { k: 0.0, n_pairs: n, dt: Some(1.0 / 256.0), seed: 4 }
    }

    #[test]
    fn driftless_pairs_couple_by_the_horizon() {
        let p = SdeProblem::heat(1, 1.0);
        let s = simulate_coupled_pair(&p, &[0.0], &[1.0], &spec(500)).unwrap();
        assert_eq!(s.success_fraction, 1.0);
        assert!(s.tau.iter().all(|t| t.unwrap() <= 1.0 + 1e-12));
        assert!(s.density.within(1.0, 3.0));
        assert!(s.warning.is_none());
    }

    #[test]
    fn equal_start_points_are_coupled_at_zero() {
        let p = SdeProblem::heat(2, 1.0);
        let s = simulate_coupled_pair(&p, &[0.5, 0.5], &[0.5, 0.5], &spec(20)).unwrap();
        assert!(s.tau.iter().all(|t| *t == Some(0.0)));
        assert!(s.log_density.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn expanding_drift_triggers_semi_lipschitz_warning() {
        let p = SdeProblem::brownian(
            CoefficientField::vector("expand", 1, |_, x, o| o[0] = 2.0 * x[0]),
            CoefficientField::identity(1),
            1.0,
        )
        .unwrap();
        let s = simulate_coupled_pair(&p, &[0.0], &[1.0], &spec(10)).unwrap();
        assert!(s.semi_lipschitz_violations > 0);
        assert!(s.warning.is_some());
    }

    #[test]
    fn rejects_non_identity_diffusion() {
        let p = SdeProblem::brownian(
            CoefficientField::zero_drift(1),
            CoefficientField::constant_matrix("two", 1, &[2.0]),
            1.0,
        )
        .unwrap();
        assert!(simulate_coupled_pair(&p, &[0.0], &[1.0], &spec(10)).is_err());
    }
}
