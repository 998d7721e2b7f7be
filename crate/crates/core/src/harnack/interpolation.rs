//! Nested Monte Carlo check of
//! `T_{s,u} log T_{u,t} f(x) − log T_{s,t} f(x) = −∫_s^u T_{s,r}(Γ(r)(T_{r,t} f)/(T_{r,t} f)²)(x) dr`
//! for driftless one-dimensional equations, where `Γ(r)(g)/g² = ½|σ(r,·) ∂ log g|²`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::error::{arg_err, Result};
use crate::math::{log, sq, sqrt};
use crate::quadrature::trapezoid;
use crate::rng::derive_seed;
use crate::sde::{simulate_paths, EnsembleSpec, SdeProblem};
use crate::semigroup::TestFunction;
use crate::stats::Welford;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationConfig {
    /// Outer paths from `(s, x)`.
    pub n_outer: usize,
    /// Paths per inner estimate `T_{r,t} f(z)`.
    pub n_inner: usize,
    /// Quadrature nodes in `[s, u]`, endpoints included.
    pub nodes: usize,
    /// Grid points carrying the inner estimates.
    pub grid_points: usize,
    /// Independent repetitions of the inner layer, used to measure its error.
    pub inner_replicates: usize,
    pub seed: u64,
    pub dt: Option<f64>,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig {
            n_outer: 100_000,
            n_inner: 20_000,
            nodes: 5,
            grid_points: 41,
            inner_replicates: 4,
            seed: 1,
            dt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub s: f64,
    pub u: f64,
    pub t: f64,
    pub x: f64,
    pub nodes: Vec<f64>,
    /// `T_{s,r}(Γ(T_{r,t}f)/(T_{r,t}f)²)(x)` at each node.
    pub integrand: Vec<f64>,
    /// `T_{s,u} log T_{u,t} f(x) − log T_{s,t} f(x)`.
    pub lhs: f64,
    /// `−∫_s^u … dr` by the trapezoid rule.
    pub rhs: f64,
    pub residual: f64,
    pub stderr_outer: f64,
    pub stderr_inner: f64,
    /// `sqrt(outer² + inner²)`.
    pub stderr: f64,
    /// `Holds` when `|residual| ≤ 3·stderr`.
    pub verdict: Verdict,
}

/// `log T_{τ,t} f` on a uniform grid with cubic Hermite interpolation.
struct LogProfile {
    z0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl LogProfile {
    fn new(z0: f64, h: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let slopes = (0..n)
            .map(|j| match j {
                0 => (values[1] - values[0]) / h,
                j if j == n - 1 => (values[n - 1] - values[n - 2]) / h,
                j => (values[j + 1] - values[j - 1]) / (2.0 * h),
            })
            .collect();
        LogProfile { z0, h, values, slopes }
    }

    /// Value and derivative at `z`.
    fn eval(&self, z: f64) -> (f64, f64) {
        let n = self.values.len();
        let s = ((z - self.z0) / self.h).clamp(0.0, (n - 1) as f64);
        let j = (s as usize).min(n - 2);
        let u = s - j as f64;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * self.h, self.slopes[j + 1] * self.h);
        let (u2, u3) = (u * u, u * u * u);
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        let dv = (6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * m1;
        (v, dv / self.h)
    }
}

/// Runs the diagnostic at `(s, u, t, x)`.
pub fn verify_interpolation_identity(
    problem: &SdeProblem,
    f: &TestFunction,
    s: f64,
    u: f64,
    t: f64,
    x: f64,
    cfg: &InterpolationConfig,
) -> Result<InterpolationReport> {
    if problem.dim() != 1 || !problem.drift().is_zero() {
        return arg_err("the interpolation diagnostic needs a driftless one-dimensional problem");
    }
    if !f.is_at_least_one() {
        return arg_err(alloc::format!("`{}` is not declared ≥ 1", f.name()));
    }
    if !(0.0 <= s && s <= u && u <= t) {
        return arg_err("need 0 ≤ s ≤ u ≤ t");
    }
    if cfg.nodes < 2 || cfg.grid_points < 4 || cfg.inner_replicates < 2 {
        return arg_err("need ≥ 2 nodes, ≥ 4 grid points and ≥ 2 inner replicates");
    }
    let nodes: Vec<f64> = (0..cfg.nodes).map(|k| s + (u - s) * k as f64 / (cfg.nodes - 1) as f64).collect();
    let exact = |verdict| InterpolationReport {
        s,
        u,
        t,
        x,
        nodes: nodes.clone(),
        integrand: alloc::vec![0.0; nodes.len()],
        lhs: 0.0,
        rhs: 0.0,
        residual: 0.0,
        stderr_outer: 0.0,
        stderr_inner: 0.0,
        stderr: 0.0,
        verdict,
    };
    if u == s || f.constant_value().is_some() {
        return Ok(exact(Verdict::Holds));
    }

    let mut outer_spec = EnsembleSpec::new(cfg.n_outer, derive_seed(cfg.seed, 0x07E4)).starting_at(s).save_at(&nodes[1..]);
    outer_spec.dt = cfg.dt;
    let outer = simulate_paths(problem, &[x], &outer_spec)?;
    let (mut lo, mut hi) = (x, x);
    for v in &outer.states {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let h = (hi - lo) / (cfg.grid_points - 3) as f64;
    let z0 = lo - h;
    let grid: Vec<f64> = (0..cfg.grid_points).map(|j| z0 + h * j as f64).collect();

    let sigma = problem.diffusion();
    let mut weights = alloc::vec![0.0; nodes.len()];
    {
        // trapezoid weights from unit vectors
        for k in 0..nodes.len() {
            let mut e = alloc::vec![0.0; nodes.len()];
            e[k] = 1.0;
            weights[k] = trapezoid(&nodes, &e);
        }
    }

    let mut residuals = Vec::with_capacity(cfg.inner_replicates);
    let mut outer_se = Vec::with_capacity(cfg.inner_replicates);
    let mut lhs_all = Vec::with_capacity(cfg.inner_replicates);
    let mut integrand_all: Vec<Vec<f64>> = Vec::with_capacity(cfg.inner_replicates);
    for rep in 0..cfg.inner_replicates {
        let inner_seed = derive_seed(cfg.seed, 0x1_0000 + rep as u64);
        let mut profiles = Vec::with_capacity(nodes.len());
        for &tau in &nodes {
            let mut values = Vec::with_capacity(grid.len());
            for &z in &grid {
                let v = if tau == t {
                    f.eval(&[z])
                } else {
                    let mut spec = EnsembleSpec::new(cfg.n_inner, inner_seed).starting_at(tau).save_at(&[t]);
                    spec.dt = cfg.dt;
                    let ens = simulate_paths(problem, &[z], &spec)?;
                    ens.states_at(0).map(|p| f.eval(p)).sum::<f64>() / ens.n_paths() as f64
                };
                values.push(log(v));
            }
            profiles.push(LogProfile::new(z0, h, values));
        }
        let mut s_buf = [0.0];
        let mut gamma = |k: usize, z: f64| {
            let (_, dl) = profiles[k].eval(z);
            sigma.eval(nodes[k], &[z], &mut s_buf);
            0.5 * sq(s_buf[0] * dl)
        };
        let base = profiles[0].eval(x).0;
        let i0 = gamma(0, x);
        let last = nodes.len() - 1;
        let mut q = Welford::new();
        let mut lhs_w = Welford::new();
        let mut node_means = alloc::vec![Welford::new(); nodes.len()];
        for p in 0..outer.n_paths() {
            let mut acc = weights[0] * i0;
            for k in 1..nodes.len() {
                let z = outer.state(p, k - 1)[0];
                let g = gamma(k, z);
                node_means[k].push(g);
                acc += weights[k] * g;
            }
            let lu = profiles[last].eval(outer.state(p, last - 1)[0]).0;
            lhs_w.push(lu);
            q.push(lu + acc);
        }
        node_means[0].push(i0);
        residuals.push(q.mean() - base);
        outer_se.push(sqrt(q.variance() / q.count() as f64));
        lhs_all.push(lhs_w.mean() - base);
        integrand_all.push(node_means.iter().map(|w| w.mean()).collect());
    }
    let k = residuals.len() as f64;
    let rw: Welford = residuals.iter().copied().collect();
    let residual = rw.mean();
    let stderr_inner = sqrt(rw.variance() / k);
    let stderr_outer = outer_se.iter().sum::<f64>() / k;
    let stderr = sqrt(sq(stderr_inner) + sq(stderr_outer));
    let lhs = lhs_all.iter().sum::<f64>() / k;
    let integrand: Vec<f64> = (0..nodes.len()).map(|j| integrand_all.iter().map(|v| v[j]).sum::<f64>() / k).collect();
    let rhs = -trapezoid(&nodes, &integrand);
    let scale = lhs.abs().max(rhs.abs());
    let verdict = if !residual.is_finite() || !stderr.is_finite() || stderr > 0.25 * scale {
        Verdict::Inconclusive
    } else if residual.abs() <= 3.0 * stderr {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(InterpolationReport {
        s,
        u,
        t,
        x,
        nodes,
        integrand,
        lhs,
        rhs,
        residual,
        stderr_outer,
        stderr_inner,
        stderr,
        verdict,
    })
}
