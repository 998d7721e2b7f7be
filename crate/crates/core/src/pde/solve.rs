//! Implicit-Euler solvers for the backward system `∂_r u + L_r u + b = 0, u(t) = 0` and the
//! resolvent system `∂_t ψ + L_t ψ − λψ = f`, on `[−L, L]^d` with Neumann boundaries.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, SpaceTimeGrid, SpatialGrid};
use super::linear::{bicgstab, thomas, Csr};
use crate::error::{arg_err, Error, Result};
use crate::fields::{CoefficientField, FieldKind};
use crate::linalg::sym_eigen_range;

/// Relative residual accepted for every implicit step.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Stopping tolerance for the stationary phase of the resolvent system.
pub const STATIONARY_TOL: f64 = 1e-10;
const KRYLOV_TOL: f64 = 1e-12;
const KRYLOV_MAX_ITER: usize = 5000;
const MAX_STATIONARY_STEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeSolutionReport {
    /// Largest Hilbert–Schmidt norm of the nodal gradient over all slices.
    pub sup_grad: f64,
    pub sup_hessian: f64,
    /// Lipschitz constant of the interpolant (an upper bound for its gradient everywhere).
    pub lipschitz_bound: f64,
    /// Largest relative residual of the discrete equations over all implicit steps.
    pub residual: f64,
    /// Length of the time interval solved on.
    pub horizon: f64,
    /// Pseudo-time iterations of the stationary phase (resolvent system only).
    pub stationary_iterations: usize,
    pub lambda: Option<f64>,
}

/// `c0·I − Δ·L_t` on the grid, with `L = ½ Tr(a∇²) + ⟨b, ∇⟩` (drift optional).
fn assemble(
    sp: &SpatialGrid,
    a: &CoefficientField,
    b: Option<&CoefficientField>,
    t: f64,
    c0: f64,
    step: f64,
) -> Result<Csr> {
    let d = sp.dim;
    let h = sp.h();
    let n = sp.n_nodes();
    let mut err: Option<Error> = None;
    let m = Csr::from_rows(n, |node, row| {
        let mut idx = [0usize; 2];
        let mut x = [0.0; 2];
        sp.index(node, &mut idx);
        sp.point(node, &mut x);
        let mut av = [0.0; 4];
        a.eval(t, &x[..d], &mut av[..d * d]);
        let mut bv = [0.0; 2];
        if let Some(b) = b {
            b.eval(t, &x[..d], &mut bv[..d]);
        }
        if err.is_none() {
            if av[..d * d].iter().chain(&bv[..d]).any(|v| !v.is_finite()) {
                err = Some(Error::Evaluation { field: a.name().into(), t, x: x[..d].to_vec() });
            } else {
                let (lo, hi) = sym_eigen_range(&av[..d * d], d);
                if !(lo > 1e-12 * hi.max(1e-300)) {
                    err = Some(Error::Precondition(alloc::format!(
                        "diffusion matrix is not elliptic at t = {t}, x = {:?}",
                        &x[..d]
                    )));
                }
            }
        }
        let at = |shift: [isize; 2]| {
            let mut j = idx;
            for ax in 0..d {
                j[ax] = sp.reflect(idx[ax] as isize + shift[ax]);
            }
            sp.node(&j)
        };
        row.push((node, c0));
        for ax in 0..d {
            let mut e = [0isize; 2];
            let diff = 0.5 * av[ax * d + ax] / (h * h);
            let conv = bv[ax] / (2.0 * h);
            e[ax] = 1;
            row.push((at(e), -step * (diff + conv)));
            e[ax] = -1;
            row.push((at(e), -step * (diff - conv)));
            row.push((node, 2.0 * step * diff));
            for bx in ax + 1..d {
                let mixed = 0.5 * (av[ax * d + bx] + av[bx * d + ax]) / (4.0 * h * h);
                for (sa, sb) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
                    let mut s = [0isize; 2];
                    s[ax] = sa;
                    s[bx] = sb;
                    row.push((at(s), -step * mixed * (sa * sb) as f64));
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

/// An assembled implicit-step matrix with a solver.
struct StepMatrix {
    csr: Csr,
    tri: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl StepMatrix {
    fn new(csr: Csr) -> Self {
        let tri = csr.tridiagonal();
        StepMatrix { csr, tri }
    }

    /// Solves for every component of `rhs` (layout `[node][component]`); `x` holds the guess
    /// and receives the solution. Returns the largest relative residual.
    fn solve(&self, rhs: &[f64], comps: usize, x: &mut [f64]) -> Result<f64> {
        let n = self.csr.n;
        let mut col = alloc::vec![0.0; n];
        let mut sol = alloc::vec![0.0; n];
        let mut scratch = Vec::new();
        let mut ax = alloc::vec![0.0; n];
        let mut worst = 0.0f64;
        for c in 0..comps {
            for i in 0..n {
                col[i] = rhs[i * comps + c];
                sol[i] = x[i * comps + c];
            }
            match &self.tri {
                Some((lo, di, up)) => {
                    sol.copy_from_slice(&col);
                    thomas(lo, di, up, &mut sol, &mut scratch)?;
                }
                None => {
                    bicgstab(&self.csr, &col, &mut sol, KRYLOV_TOL, KRYLOV_MAX_ITER)?;
                }
            }
            self.csr.mul(&sol, &mut ax);
            let scale = col.iter().chain(&sol).fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                let r = (0..n).fold(0.0f64, |m, i| m.max((ax[i] - col[i]).abs()));
                worst = worst.max(r / scale);
            }
            for i in 0..n {
                x[i * comps + c] = sol[i];
            }
        }
        Ok(worst)
    }
}

fn sample(field: &CoefficientField, sp: &SpatialGrid, t: f64, out: &mut [f64]) -> Result<()> {
    let comps = field.output_len();
    let mut x = [0.0; 2];
    for node in 0..sp.n_nodes() {
        sp.point(node, &mut x);
        let o = &mut out[node * comps..(node + 1) * comps];
        field.eval(t, &x[..sp.dim], o);
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { field: field.name().into(), t, x: x[..sp.dim].to_vec() });
        }
    }
    Ok(())
}

fn check_inputs(a: &CoefficientField, b: &CoefficientField, grid: &SpaceTimeGrid) -> Result<()> {
    let d = grid.space.dim;
    if a.kind() != FieldKind::Matrix || a.dim() != d {
        return arg_err("a must be a d × d matrix field matching the grid dimension");
    }
    if b.kind() != FieldKind::Vector || b.dim() != d {
        return arg_err("b must be a vector field matching the grid dimension");
    }
    Ok(())
}

fn finish(u: GridFunction, residual: f64, horizon: f64, stationary_iterations: usize, lambda: Option<f64>) -> Result<(GridFunction, PdeSolutionReport)> {
    if !u.all_finite() {
        return Err(Error::Convergence("solution contains non-finite values".into()));
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence(alloc::format!(
            "discrete residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    let report = PdeSolutionReport {
        sup_grad: u.sup_gradient(),
        sup_hessian: u.sup_hessian(),
        lipschitz_bound: u.interpolant_lipschitz_bound(),
        residual,
        horizon,
        stationary_iterations,
        lambda,
    };
    Ok((u, report))
}

/// Solves `∂_r u + L_r u + b = 0` on `[s, t]` with `u(t, ·) = 0`, componentwise for the
/// `d` components of `b`; `L_r = ½ Tr(a∇²) + ⟨b, ∇⟩` when `include_drift_in_l`.
///
/// Implicit Euler backwards from `t`: `(I − Δ L_{r_k}) u_k = u_{k+1} + Δ b(r_k)`.
pub fn solve_backward_system(
    a: &CoefficientField,
    b: &CoefficientField,
    grid: &SpaceTimeGrid,
    include_drift_in_l: bool,
) -> Result<(GridFunction, PdeSolutionReport)> {
    check_inputs(a, b, grid)?;
    let sp = grid.space;
    let d = sp.dim;
    let n = sp.n_nodes();
    let dt = grid.dt();
    let drift = include_drift_in_l.then_some(b);
    let frozen = !(a.is_time_dependent() || b.is_time_dependent());
    let mut u = GridFunction::zeros(sp, grid.times(), d);
    let mut cached: Option<StepMatrix> = None;
    let mut src = alloc::vec![0.0; n * d];
    let mut rhs = alloc::vec![0.0; n * d];
    let mut residual = 0.0f64;
    for k in (0..grid.steps).rev() {
        let t = grid.time(k);
        if cached.is_none() || !frozen {
            cached = Some(StepMatrix::new(assemble(&sp, a, drift, t, 1.0, dt)?));
        }
        sample(b, &sp, t, &mut src)?;
        let next = u.slice(k + 1);
        for i in 0..n * d {
            rhs[i] = next[i] + dt * src[i];
        }
        let mut x = next.to_vec();
        residual = residual.max(cached.as_ref().expect("assembled").solve(&rhs, d, &mut x)?);
        u.slice_mut(k).copy_from_slice(&x);
    }
    finish(u, residual, grid.t_end - grid.t_start, 0, None)
}

/// Solves `∂_t ψ + L_t ψ − λψ = f` on `[s, t]`, `L_t = ½ Tr(a∇²) + ⟨b, ∇⟩`, for the bounded
/// solution with coefficients frozen at `t` for later times.
///
/// The terminal slice is the stationary solution at time `t`, reached by pseudo-time
/// stepping `((1 + λ)I − L_t) ψ ← ψ − f(t)` until the increment drops below
/// [`STATIONARY_TOL`]; the interval is then swept backwards with implicit Euler
/// `((1 + Δλ)I − Δ L_{t_k}) ψ_k = ψ_{k+1} − Δ f(t_k)`.
pub fn solve_resolvent_system(
    a: &CoefficientField,
    b: &CoefficientField,
    f: &CoefficientField,
    lambda: f64,
    grid: &SpaceTimeGrid,
) -> Result<(GridFunction, PdeSolutionReport)> {
    check_inputs(a, b, grid)?;
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return arg_err("λ must be ≥ 1");
    }
    if f.kind() != FieldKind::Vector || f.dim() != grid.space.dim {
        return arg_err("source f must be a vector field matching the grid dimension");
    }
    let sp = grid.space;
    let comps = f.output_len();
    let n = sp.n_nodes();
    let drift = (!b.is_zero()).then_some(b);
    let mut psi = GridFunction::zeros(sp, grid.times(), comps);
    let mut src = alloc::vec![0.0; n * comps];
    let mut rhs = alloc::vec![0.0; n * comps];
    let mut residual = 0.0f64;

    // stationary phase at the terminal time
    let pseudo = 1.0;
    let t_end = grid.t_end;
    let stationary = StepMatrix::new(assemble(&sp, a, drift, t_end, 1.0 + pseudo * lambda, pseudo)?);
    sample(f, &sp, t_end, &mut src)?;
    let mut cur = alloc::vec![0.0; n * comps];
    let mut iterations = 0;
    loop {
        iterations += 1;
        for i in 0..n * comps {
            rhs[i] = cur[i] - pseudo * src[i];
        }
        let mut next = cur.clone();
        residual = residual.max(stationary.solve(&rhs, comps, &mut next)?);
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let incr = next.iter().zip(&cur).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        cur = next;
        if incr <= STATIONARY_TOL * scale {
            break;
        }
        if iterations >= MAX_STATIONARY_STEPS {
            return Err(Error::Convergence(alloc::format!(
                "stationary phase still moving by {incr:e} after {iterations} steps"
            )));
        }
    }
    psi.slice_mut(grid.steps).copy_from_slice(&cur);

    let dt = grid.dt();
    let frozen = !(a.is_time_dependent() || b.is_time_dependent());
    let mut cached: Option<StepMatrix> = None;
    for k in (0..grid.steps).rev() {
        let t = grid.time(k);
        if cached.is_none() || !frozen {
            cached = Some(StepMatrix::new(assemble(&sp, a, drift, t, 1.0 + dt * lambda, dt)?));
        }
        sample(f, &sp, t, &mut src)?;
        let next = psi.slice(k + 1);
        for i in 0..n * comps {
            rhs[i] = next[i] - dt * src[i];
        }
        let mut x = next.to_vec();
        residual = residual.max(cached.as_ref().expect("assembled").solve(&rhs, comps, &mut x)?);
        psi.slice_mut(k).copy_from_slice(&x);
    }
    finish(psi, residual, grid.t_end - grid.t_start, iterations, Some(lambda))
}

/// Largest difference, over nodes of `small` inside `[−L/2, L/2]^d` and all its slices,
/// between `small` and the interpolant of `large` (a run on a wider box).
pub fn boundary_sensitivity(small: &GridFunction, large: &GridFunction) -> f64 {
    let sp = small.space;
    let mut x = [0.0; 2];
    let mut worst = 0.0f64;
    for (k, &t) in small.times.iter().enumerate() {
        for node in 0..sp.n_nodes() {
            sp.point(node, &mut x);
            if x[..sp.dim].iter().any(|v| v.abs() > 0.5 * sp.half_width) {
                continue;
            }
            let other = large.eval_vec(t, &x[..sp.dim]);
            for (p, q) in small.at_node(k, node).iter().zip(&other) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    worst
}
