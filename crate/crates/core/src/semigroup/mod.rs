//! Monte Carlo estimates of `P_{s,t} f(x) = E f(X_t)` with `X_s = x`, of `P log f` and
//! `P f^p`, the L² gradient estimate `|∇P_t f|² ≤ C P_t|∇f|²`, and the convergence of
//! mollified-coefficient solutions.

pub mod functions;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use functions::{TestFunction, EXP_TILT_CAP};

use crate::error::{arg_err, Error, Result};
use crate::fields::{mollify, CoefficientField};
use crate::linalg;
use crate::math::{log, pow, sqrt};
use crate::sde::{simulate_paths, EnsembleSpec, PathEnsemble, SdeProblem};
use crate::stats::{McEstimate, Welford};
use crate::MAX_DIM;

/// Paths per estimate unless configured otherwise.
pub const DEFAULT_PATHS: usize = 100_000;
/// Smallest finite-difference step for `∇P_t f`.
pub const MIN_FD_STEP: f64 = 1e-3;

/// Sample size, seed and step shared by a batch of estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Euler step; `None` uses the problem default `T / 2048`.
    pub dt: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: DEFAULT_PATHS, seed: 1, dt: None }
    }
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig { n_paths, seed, dt: None }
    }

    pub fn step(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub(crate) fn ensemble(&self, s: f64, t: f64) -> EnsembleSpec {
        let mut spec = EnsembleSpec::new(self.n_paths, self.seed).starting_at(s).save_at(&[t]);
        spec.dt = self.dt;
        spec
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Functional {
    /// `E f(X_t)`.
    Plain,
    /// `E log f(X_t)`, for `f ≥ 1`.
    Log,
    /// `E f(X_t)^p`, for `f ≥ 0` and `p > 1`.
    Power { p: f64 },
}

/// One estimate with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub functional: Functional,
    pub f: String,
    pub s: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub estimate: McEstimate,
}

fn check_functional(kind: Functional, f: &TestFunction) -> Result<()> {
    match kind {
        Functional::Plain => Ok(()),
        Functional::Log if !f.is_at_least_one() => Err(Error::Integrand(alloc::format!(
            "log functional needs a test function declared ≥ 1; `{}` is not",
            f.name()
        ))),
        Functional::Log => Ok(()),
        Functional::Power { p } if !(p > 1.0) => arg_err(alloc::format!("power functional needs p > 1, got {p}")),
        Functional::Power { .. } if !f.is_nonnegative() => Err(Error::Integrand(alloc::format!(
            "power functional needs a test function declared ≥ 0; `{}` is not",
            f.name()
        ))),
        Functional::Power { .. } => Ok(()),
    }
}

#[inline]
fn integrand(kind: Functional, f: &TestFunction, x: &[f64]) -> Result<f64> {
    let v = f.eval(x);
    match kind {
        Functional::Plain => Ok(v),
        Functional::Log if v >= 1.0 => Ok(log(v)),
        Functional::Log => Err(Error::Integrand(alloc::format!("{} = {v} < 1 at {x:?}", f.name()))),
        Functional::Power { p } if v >= 0.0 => Ok(pow(v, p)),
        Functional::Power { .. } => Err(Error::Integrand(alloc::format!("{} = {v} < 0 at {x:?}", f.name()))),
    }
}

/// The ensemble of `X_t` started at `(s, x)`.
pub fn terminal_ensemble(problem: &SdeProblem, s: f64, t: f64, x: &[f64], cfg: &McConfig) -> Result<PathEnsemble> {
    if !(s <= t) {
        return arg_err(alloc::format!("need s ≤ t, got s = {s}, t = {t}"));
    }
    simulate_paths(problem, x, &cfg.ensemble(s, t))
}

/// Mean of `kind(f)` over the states stored at save index `save`.
pub fn functional_over(ensemble: &PathEnsemble, save: usize, kind: Functional, f: &TestFunction) -> Result<McEstimate> {
    check_functional(kind, f)?;
    let mut w = Welford::new();
    for x in ensemble.states_at(save) {
        w.push(integrand(kind, f, x)?);
    }
    Ok(McEstimate::from_moments(&w))
}

/// `E[kind(f)(X_t)]` with `X_s = x`.
pub fn estimate_functional(
    problem: &SdeProblem,
    kind: Functional,
    f: &TestFunction,
    s: f64,
    t: f64,
    x: &[f64],
    cfg: &McConfig,
) -> Result<FunctionalEstimate> {
    check_functional(kind, f)?;
    if f.dim() != problem.dim() || x.len() != problem.dim() {
        return arg_err("test function, point and problem dimensions differ");
    }
    if !(s <= t) {
        return arg_err(alloc::format!("need s ≤ t, got s = {s}, t = {t}"));
    }
    let estimate = if f.constant_value().is_some() {
        McEstimate::from_parts(integrand(kind, f, x)?, 0.0, cfg.n_paths)
    } else if s == t {
        McEstimate::exact(integrand(kind, f, x)?)
    } else {
        let ens = terminal_ensemble(problem, s, t, x, cfg)?;
        functional_over(&ens, 0, kind, f)?
    };
    Ok(FunctionalEstimate {
        functional: kind,
        f: f.name().into(),
        s,
        t,
        x: x.to_vec(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        estimate,
    })
}

/// Index pairs `(i, j)` of paths with equal stream ids in two ensembles.
pub(crate) fn paired_paths(a: &PathEnsemble, b: &PathEnsemble) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(a.n_paths().min(b.n_paths()));
    let (mut i, mut j) = (0, 0);
    while i < a.n_paths() && j < b.n_paths() {
        match a.path_ids[i].cmp(&b.path_ids[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Measured sides of `|∇P_t f(x)|² ≤ C P_t|∇f|²(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientRatio {
    pub f: String,
    pub t: f64,
    pub x: Vec<f64>,
    /// Finite-difference step `max(10⁻³, stderr(P_t f(x))^{1/2})`.
    pub h: f64,
    /// Components of `∇P_t f(x)` from common-random-number central differences.
    pub gradient: Vec<McEstimate>,
    /// `|∇P_t f(x)|²`, with delta-method error.
    pub lhs: McEstimate,
    /// `P_t|∇f|²(x)`.
    pub rhs: McEstimate,
    pub ratio: f64,
    pub ratio_stderr: f64,
}

/// Estimates both sides of the gradient inequality at `(t, x)`. The two ensembles of every
/// central difference share the seed, so each path sees the same noise on both sides.
pub fn estimate_gradient_ratio(
    problem: &SdeProblem,
    f: &TestFunction,
    t: f64,
    x: &[f64],
    cfg: &McConfig,
) -> Result<GradientRatio> {
    let d = problem.dim();
    if f.dim() != d || x.len() != d {
        return arg_err("test function, point and problem dimensions differ");
    }
    if !f.has_gradient() {
        return arg_err(alloc::format!("`{}` has no declared gradient", f.name()));
    }
    if !(t > 0.0) {
        return arg_err("gradient estimate needs t > 0");
    }
    let base = terminal_ensemble(problem, 0.0, t, x, cfg)?;
    let plain = functional_over(&base, 0, Functional::Plain, f)?;
    let mut g = [0.0; MAX_DIM];
    let mut w = Welford::new();
    for y in base.states_at(0) {
        f.gradient(y, &mut g[..d]);
        w.push(linalg::dot(&g[..d], &g[..d]));
    }
    let rhs = McEstimate::from_moments(&w);
    if !(rhs.mean > 0.0) || rhs.mean <= rhs.half_width {
        return Err(Error::Degenerate(alloc::format!(
            "P_t|∇f|² = {} ± {} is indistinguishable from 0",
            rhs.mean, rhs.half_width
        )));
    }
    let h = MIN_FD_STEP.max(sqrt(plain.stderr));
    let mut gradient = Vec::with_capacity(d);
    let mut p = x.to_vec();
    for i in 0..d {
        p[i] = x[i] + h;
        let up = terminal_ensemble(problem, 0.0, t, &p, cfg)?;
        p[i] = x[i] - h;
        let down = terminal_ensemble(problem, 0.0, t, &p, cfg)?;
        p[i] = x[i];
        let mut diff = Welford::new();
        for (a, b) in paired_paths(&up, &down) {
            diff.push((f.eval(up.state(a, 0)) - f.eval(down.state(b, 0))) / (2.0 * h));
        }
        gradient.push(McEstimate::from_moments(&diff));
    }
    let norm2: f64 = gradient.iter().map(|e| e.mean * e.mean).sum();
    let lhs_se = 2.0 * sqrt(gradient.iter().map(|e| e.mean * e.mean * e.stderr * e.stderr).sum::<f64>());
    let lhs = McEstimate::from_parts(norm2, lhs_se, cfg.n_paths);
    let ratio = lhs.mean / rhs.mean;
    let rel_l = if lhs.mean > 0.0 { lhs.stderr / lhs.mean } else { 0.0 };
    let ratio_stderr = if lhs.mean > 0.0 {
        ratio * sqrt(rel_l * rel_l + (rhs.stderr / rhs.mean) * (rhs.stderr / rhs.mean))
    } else {
        lhs.stderr / rhs.mean
    };
    Ok(GradientRatio { f: f.name().into(), t, x: x.to_vec(), h, gradient, lhs, rhs, ratio, ratio_stderr })
}

/// Gradient ratios for the mollified family `σⁿ`, `n` in `schedule`.
pub fn mollified_gradient_ratios(
    drift: &CoefficientField,
    sigma: &CoefficientField,
    schedule: &[u32],
    f: &TestFunction,
    t: f64,
    x: &[f64],
    cfg: &McConfig,
) -> Result<Vec<(u32, GradientRatio)>> {
    let mut out = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let problem = SdeProblem::brownian(drift.clone(), mollify(sigma, n)?, t)?;
        out.push((n, estimate_gradient_ratio(&problem, f, t, x, cfg)?));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollificationReport {
    pub schedule: Vec<u32>,
    /// Index used as the reference solution (the largest `n`).
    pub reference_n: u32,
    /// `E|Yⁿ_t − Y_t|` per scheduled `n`.
    pub distances: Vec<McEstimate>,
    /// Consecutive distances never increase by more than 3 combined standard errors.
    pub nonincreasing: bool,
}

/// Driftless solutions with diffusion `σⁿ`, all driven by the same Brownian paths, compared
/// with the solution for the largest scheduled `n`.
pub fn mollification_convergence(
    sigma: &CoefficientField,
    x: &[f64],
    t: f64,
    schedule: &[u32],
    cfg: &McConfig,
) -> Result<MollificationReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return arg_err("mollification schedule must be nonempty and increasing");
    }
    let d = sigma.dim();
    let reference_n = *schedule.last().expect("nonempty");
    let drift = CoefficientField::zero_drift(d);
    let run = |n: u32| -> Result<PathEnsemble> {
        let problem = SdeProblem::brownian(drift.clone(), mollify(sigma, n)?, t)?;
        terminal_ensemble(&problem, 0.0, t, x, cfg)
    };
    let reference = run(reference_n)?;
    let mut distances = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let est = if n == reference_n {
            McEstimate::from_parts(0.0, 0.0, reference.n_paths())
        } else {
            let ens = run(n)?;
            McEstimate::from_samples(
                paired_paths(&ens, &reference)
                    .into_iter()
                    .map(|(a, b)| linalg::distance(ens.state(a, 0), reference.state(b, 0))),
            )
        };
        distances.push(est);
    }
    let nonincreasing = distances.windows(2).all(|w| {
        w[1].mean <= w[0].mean + 3.0 * sqrt(w[0].stderr * w[0].stderr + w[1].stderr * w[1].stderr)
    });
    Ok(MollificationReport { schedule: schedule.to_vec(), reference_n, distances, nonincreasing })
}
