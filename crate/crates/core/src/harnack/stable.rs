//! Heat-kernel bounds and the Harnack inequality for SDEs driven by symmetric α-stable noise.
//!
//! Two-sided bound: `c⁻¹ g(t, |x − y|) ≤ p(t, x, y) ≤ c g(t, |x − y|)` with
//! `g(t, r) = t^{−d/α} ∧ t/r^{d+α}`. It implies
//! `p(t, x, z)/p(t, y, z) ≤ 2^{α+d}c²(1 + |x − y|/t^{1/α})^{d+α}`, which integrates to the
//! Harnack inequality with `C = 2^{α+d}c²`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{verdict, HarnackReport, Side, StatementConstants, StatementId};
use crate::error::{arg_err, Result};
use crate::linalg;
use crate::math::{exp, pow, sqrt};
use crate::rng::derive_seed;
use crate::sde::{restart, simulate_paths, Driver, EnsembleSpec, PathEnsemble, SdeProblem};
use crate::semigroup::{functional_over, Functional, McConfig, TestFunction};
use crate::stats::{quantile_sorted, sorted_copy, McEstimate, Welford};

/// Tail probes are restricted to `|x − z| ≤ TAIL_REACH · t^{1/α}`.
pub const TAIL_REACH: f64 = 8.0;
/// Probes whose density estimate has relative standard error above this are dropped.
pub const MAX_RELATIVE_STDERR: f64 = 0.25;

/// `g(t, r) = t^{−d/α} ∧ t/r^{d+α}`.
pub fn kernel_profile(alpha: f64, d: usize, t: f64, r: f64) -> f64 {
    let near = pow(t, -(d as f64) / alpha);
    if r == 0.0 {
        return near;
    }
    near.min(t / pow(r, d as f64 + alpha))
}

/// `2^{α+d}c²`.
pub fn harnack_constant_from_kernel(c: f64, alpha: f64, d: usize) -> f64 {
    pow(2.0, alpha + d as f64) * c * c
}

fn alpha_of(problem: &SdeProblem) -> Result<f64> {
    match problem.driver() {
        Driver::Stable { alpha } => Ok(alpha),
        Driver::Brownian => arg_err("problem is not driven by α-stable noise"),
    }
}

/// Gaussian kernel density estimate in one dimension.
struct Kde {
    sorted: Vec<f64>,
    h: f64,
}

impl Kde {
    /// Bandwidth `0.9·min(sd, IQR/1.34)·n^{−1/5}`.
    fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return arg_err("density estimate needs at least two samples");
        }
        let sorted = sorted_copy(samples);
        let w: Welford = samples.iter().copied().collect();
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let spread = sqrt(w.variance()).min(iqr / 1.34);
        let h = 0.9 * spread * pow(samples.len() as f64, -0.2);
        if !(h > 0.0) {
            return arg_err("samples are degenerate; no bandwidth");
        }
        Ok(Kde { sorted, h })
    }

    /// Estimate at `z` and its standard error.
    fn eval(&self, z: f64) -> (f64, f64) {
        let n = self.sorted.len() as f64;
        let reach = 8.0 * self.h;
        let lo = self.sorted.partition_point(|v| *v < z - reach);
        let hi = self.sorted.partition_point(|v| *v <= z + reach);
        let norm = 1.0 / (self.h * sqrt(2.0 * core::f64::consts::PI));
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in &self.sorted[lo..hi] {
            let u = (z - v) / self.h;
            let k = norm * exp(-0.5 * u * u);
            s1 += k;
            s2 += k * k;
        }
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        (mean, sqrt(var / n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProbe {
    pub x: f64,
    pub z: f64,
    pub density: f64,
    pub stderr: f64,
    pub profile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundsReport {
    pub alpha: f64,
    pub t: f64,
    pub n_paths: usize,
    /// Bandwidth per start point.
    pub bandwidths: Vec<f64>,
    /// Smallest `c` with `c⁻¹ g ≤ p̂ ≤ c g` on every retained probe.
    pub c_fit: f64,
    pub c_fit_doubled: Option<f64>,
    pub stable: Option<bool>,
    pub probes: Vec<DensityProbe>,
    /// Largest `p̂(t,x,z)/p̂(t,y,z)` divided by its bound `2^{α+d}c²(1 + |x−y|/t^{1/α})^{d+α}`.
    pub ratio_bound_max: f64,
    pub ratio_probes: usize,
    pub ratio_bound_holds: bool,
    pub warnings: Vec<String>,
}

struct Fitted {
    bandwidths: Vec<f64>,
    c: f64,
    probes: Vec<DensityProbe>,
    /// Per start: the retained `(z, density)`.
    table: Vec<Vec<(f64, f64)>>,
    warnings: Vec<String>,
}

fn fit_kernel(problem: &SdeProblem, alpha: f64, t: f64, starts: &[f64], offsets: &[f64], cfg: &McConfig) -> Result<Fitted> {
    let reach = TAIL_REACH * pow(t, 1.0 / alpha);
    let mut bandwidths = Vec::with_capacity(starts.len());
    let mut probes = Vec::new();
    let mut table = Vec::with_capacity(starts.len());
    let mut warnings = Vec::new();
    let mut c = 1.0f64;
    for (i, &x) in starts.iter().enumerate() {
        let c_i = cfg.clone().with_seed(derive_seed(cfg.seed, i as u64));
        let ens = simulate_paths(problem, &[x], &c_i.ensemble(0.0, t))?;
        let kde = Kde::new(&ens.coordinate(0, 0))?;
        bandwidths.push(kde.h);
        let mut row = Vec::new();
        for &r in offsets {
            if r.abs() > reach {
                continue;
            }
            let z = x + r;
            let (p, se) = kde.eval(z);
            if !(p > 0.0) || se > MAX_RELATIVE_STDERR * p {
                warnings.push(alloc::format!("dropped probe x = {x}, z = {z}: density {p:e} ± {se:e} below noise floor"));
                continue;
            }
            let g = kernel_profile(alpha, 1, t, r.abs());
            c = c.max(p / g).max(g / p);
            probes.push(DensityProbe { x, z, density: p, stderr: se, profile: g });
            row.push((z, p));
        }
        table.push(row);
    }
    Ok(Fitted { bandwidths, c, probes, table, warnings })
}

/// Fits the two-sided kernel bound constant from density estimates at time `t` of paths
/// started at each of `starts` (probes at `z = x + r`, `r` in `offsets`), then checks the
/// ratio bound for every pair of starts on their common probe points. One-dimensional.
pub fn verify_kernel_bounds(
    problem: &SdeProblem,
    t: f64,
    starts: &[f64],
    offsets: &[f64],
    cfg: &McConfig,
    check_stability: bool,
) -> Result<KernelBoundsReport> {
    let alpha = alpha_of(problem)?;
    if problem.dim() != 1 {
        return arg_err("kernel bounds are estimated in dimension 1 only");
    }
    if !(t > 0.0 && t <= 1.0) {
        return arg_err("kernel bounds need t ∈ (0, 1]");
    }
    if starts.is_empty() || offsets.is_empty() {
        return arg_err("kernel bounds need start points and probe offsets");
    }
    let fit = fit_kernel(problem, alpha, t, starts, offsets, cfg)?;
    let (c_fit_doubled, stable) = if check_stability {
        let doubled = cfg.clone().with_paths(2 * cfg.n_paths).with_seed(derive_seed(cfg.seed, 0xD0B1));
        let c2 = fit_kernel(problem, alpha, t, starts, offsets, &doubled)?.c;
        (Some(c2), Some((c2 - fit.c).abs() < 0.1 * fit.c))
    } else {
        (None, None)
    };
    let c = fit.c;
    let mut ratio_bound_max = 0.0f64;
    let mut ratio_probes = 0;
    for (i, &x) in starts.iter().enumerate() {
        for (j, &y) in starts.iter().enumerate() {
            let bound = harnack_constant_from_kernel(c, alpha, 1) * pow(1.0 + (x - y).abs() / pow(t, 1.0 / alpha), 1.0 + alpha);
            for &(z, px) in &fit.table[i] {
                let Some(&(_, py)) = fit.table[j].iter().find(|(zz, _)| (zz - z).abs() < 1e-12) else {
                    continue;
                };
                ratio_probes += 1;
                ratio_bound_max = ratio_bound_max.max(px / py / bound);
            }
        }
    }
    Ok(KernelBoundsReport {
        alpha,
        t,
        n_paths: cfg.n_paths,
        bandwidths: fit.bandwidths,
        c_fit: c,
        c_fit_doubled,
        stable,
        probes: fit.probes,
        ratio_bound_max,
        ratio_probes,
        ratio_bound_holds: ratio_bound_max <= 1.0,
        warnings: fit.warnings,
    })
}

/// `P_T f(x)`. For `T > 1` the ensemble is run to time 1 and restarted with fresh noise,
/// following `P_T = P_1 P_{T−1}`.
pub fn stable_estimate(problem: &SdeProblem, f: &TestFunction, t: f64, x: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    if t <= 1.0 {
        let ens = simulate_paths(problem, x, &cfg.ensemble(0.0, t))?;
        return functional_over(&ens, 0, Functional::Plain, f);
    }
    let problem = if problem.horizon() < t { problem.with_horizon(t)? } else { problem.clone() };
    let first: PathEnsemble = simulate_paths(&problem, x, &cfg.ensemble(0.0, 1.0))?;
    let mut spec = EnsembleSpec::new(first.n_paths(), derive_seed(cfg.seed, 0xC0_4905)).save_at(&[t]);
    spec.dt = cfg.dt;
    let second = restart(&problem, &first, 0, &spec)?;
    functional_over(&second, 0, Functional::Plain, f)
}

/// `P_T f(x) ≤ C(1 + |x − y|/(T∧1)^{1/α})^{d+α} P_T f(y)`.
pub fn verify_stable_harnack(
    problem: &SdeProblem,
    f: &TestFunction,
    t: f64,
    x: &[f64],
    y: &[f64],
    c: f64,
    cfg: &McConfig,
) -> Result<HarnackReport> {
    let alpha = alpha_of(problem)?;
    if !(1.0..2.0).contains(&alpha) {
        return arg_err("stable Harnack needs α ∈ [1, 2)");
    }
    if !f.is_nonnegative() {
        return arg_err(alloc::format!("`{}` is not declared ≥ 0", f.name()));
    }
    if !(c >= 1.0) {
        return arg_err("the Harnack constant must be ≥ 1");
    }
    let d = problem.dim();
    if x.len() != d || y.len() != d || f.dim() != d {
        return arg_err("points, test function and problem dimensions differ");
    }
    let factor = c * pow(1.0 + linalg::distance(x, y) / pow(t.min(1.0), 1.0 / alpha), d as f64 + alpha);
    let lhs = Side::from_estimate(&stable_estimate(problem, f, t, x, cfg)?);
    let mut rhs = Side::from_estimate(&stable_estimate(problem, f, t, y, cfg)?);
    rhs.lo = rhs.lo.max(0.0);
    let rhs = Side { mean: rhs.mean * factor, stderr: rhs.stderr * factor, lo: rhs.lo * factor, hi: rhs.hi * factor };
    Ok(HarnackReport {
        statement: StatementId::Stable,
        x: x.to_vec(),
        y: y.to_vec(),
        s: 0.0,
        t,
        f: f.name().into(),
        p: None,
        verdict: verdict(&lhs, &rhs),
        lhs,
        rhs,
        term: factor,
        constants: StatementConstants {
            c: Some(c),
            provenance: alloc::format!("C = {c} (alpha = {alpha})"),
            ..Default::default()
        },
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSweepFit {
    /// Smallest `C` making every instance hold under the CI rule.
    pub c: f64,
    /// `(x, y, T, instance constant)`.
    pub instances: Vec<(Vec<f64>, Vec<f64>, f64, f64)>,
}

/// Smallest Harnack constant over a sweep of `(x, y, T)` for one test function.
pub fn fit_stable_constant(
    problem: &SdeProblem,
    f: &TestFunction,
    sweep: &[(Vec<f64>, Vec<f64>, f64)],
    cfg: &McConfig,
) -> Result<StableSweepFit> {
    let alpha = alpha_of(problem)?;
    let d = problem.dim() as f64;
    let mut c = 1.0f64;
    let mut instances = Vec::with_capacity(sweep.len());
    for (x, y, t) in sweep {
        let shape = pow(1.0 + linalg::distance(x, y) / pow(t.min(1.0), 1.0 / alpha), d + alpha);
        let lhs = stable_estimate(problem, f, *t, x, cfg)?;
        let rhs = stable_estimate(problem, f, *t, y, cfg)?;
        let ci = if rhs.lower() > 0.0 { lhs.upper() / (shape * rhs.lower()) } else { f64::INFINITY };
        c = c.max(ci);
        instances.push((x.clone(), y.clone(), *t, ci));
    }
    Ok(StableSweepFit { c: c * (1.0 + 8.0 * f64::EPSILON), instances })
}
