//! Drift-removing maps `x ↦ x + u(t, x)` built from PDE solutions, their inverses, and the
//! coefficients of the transformed equations.

pub mod constants;
pub mod ito_tanaka;
pub mod zvonkin;

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use constants::{verify_a1_a2_a3, AssumptionCertificate, ConstantInputs, HarnackConstants};
pub use ito_tanaka::{build_ito_tanaka, pushforward_consistency, ItoTanakaTransform, PushforwardReport, DEFAULT_LAMBDA_SCHEDULE};
pub use zvonkin::{build_zvonkin, ZvonkinTransform, MAX_HALVINGS};

use crate::error::{arg_err, Error, Result};
use crate::linalg;
use crate::pde::GridFunction;
use crate::MAX_DIM;

/// Newton iterations allowed in [`invert_map`].
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Absolute inversion tolerance (scaled by `max(1, |y|)`).
pub const INVERSION_TOL: f64 = 1e-12;

/// `Ψ(t, x) = x + base(t, x)` with `base` a grid function of `d` components.
#[derive(Clone, Debug)]
pub struct TransformMap {
    base: Arc<GridFunction>,
    gradient: Arc<GridFunction>,
    grad_bound: f64,
    sup_grad: f64,
}

impl TransformMap {
    pub fn new(base: GridFunction) -> Result<Self> {
        if base.comps != base.space.dim {
            return arg_err("a transform base must have d components");
        }
        let gradient = base.nodal_gradient();
        let sup_grad = base.sup_gradient();
        let grad_bound = base.interpolant_lipschitz_bound().max(sup_grad);
        Ok(TransformMap { base: Arc::new(base), gradient: Arc::new(gradient), grad_bound, sup_grad })
    }

    pub fn dim(&self) -> usize {
        self.base.space.dim
    }

    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    /// A bound on `sup |∇base|` valid everywhere (Lipschitz constant of the interpolant).
    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    /// Largest nodal central-difference gradient.
    pub fn sup_grad(&self) -> f64 {
        self.sup_grad
    }

    #[inline]
    pub fn forward(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        self.base.eval(t, x, out);
        for i in 0..d {
            out[i] += x[i];
        }
    }

    /// Interpolated nodal gradient of the base at `(t, x)`, row-major `d × d`.
    #[inline]
    pub fn base_gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.gradient.eval(t, x, out);
    }

    /// `Id + ∇base(t, x)`.
    #[inline]
    pub fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        self.gradient.eval(t, x, out);
        for i in 0..d {
            out[i * d + i] += 1.0;
        }
    }

    pub fn forward_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim()];
        self.forward(t, x, &mut out);
        out
    }

    /// Solves `forward(t, x) = y` into `out`, returning the iteration count.
    pub fn invert_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<usize> {
        let d = self.dim();
        let tol = INVERSION_TOL * linalg::norm(y).max(1.0);
        let mut x = [0.0; MAX_DIM];
        x[..d].copy_from_slice(&y[..d]);
        let mut f = [0.0; MAX_DIM];
        let residual = |x: &[f64], f: &mut [f64]| {
            self.forward(t, x, f);
            for i in 0..d {
                f[i] -= y[i];
            }
            linalg::norm(&f[..d])
        };
        let mut r = residual(&x[..d], &mut f);
        let mut jac = [0.0; MAX_DIM * MAX_DIM];
        let mut step = [0.0; MAX_DIM];
        let mut trial = [0.0; MAX_DIM];
        let mut ft = [0.0; MAX_DIM];
        for it in 0..=MAX_NEWTON_ITERATIONS {
            if r <= tol {
                out[..d].copy_from_slice(&x[..d]);
                return Ok(it);
            }
            if it == MAX_NEWTON_ITERATIONS {
                break;
            }
            self.jacobian(t, &x[..d], &mut jac[..d * d]);
            if !linalg::solve_small(&jac, d, &f, &mut step) {
                break;
            }
            let mut s = 1.0;
            loop {
                for i in 0..d {
                    trial[i] = x[i] - s * step[i];
                }
                let rt = residual(&trial[..d], &mut ft);
                if rt < r || s < 1e-6 {
                    x = trial;
                    f = ft;
                    r = rt;
                    break;
                }
                s *= 0.5;
            }
        }
        Err(Error::Inversion { iterations: MAX_NEWTON_ITERATIONS, residual: r })
    }
}

/// `x` with `forward(t, x) = y`, by damped Newton iteration from `x₀ = y`.
pub fn invert_map(map: &TransformMap, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != map.dim() {
        return arg_err("point has the wrong dimension");
    }
    if !(map.grad_bound() < 1.0) {
        return Err(Error::Transform(alloc::format!(
            "gradient bound {} is not below 1; the map may not be invertible",
            map.grad_bound()
        )));
    }
    let mut out = alloc::vec![0.0; map.dim()];
    map.invert_into(t, y, &mut out)?;
    Ok(out)
}

/// Distortion ratios `|Ψ(x) − Ψ(y)| / |x − y|` over probe pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLipschitzCheck {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Every pair satisfies `½|x − y| ≤ |Ψ(x) − Ψ(y)| ≤ (3/2)|x − y|`.
    pub holds: bool,
}

pub fn bilipschitz_check(map: &TransformMap, t: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<BiLipschitzCheck> {
    if pairs.is_empty() {
        return arg_err("bi-Lipschitz check needs probe pairs");
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut holds = true;
    for (x, y) in pairs {
        let dist = linalg::distance(x, y);
        if dist == 0.0 {
            return arg_err("probe pair with x = y");
        }
        let img = linalg::distance(&map.forward_vec(t, x), &map.forward_vec(t, y));
        holds &= 0.5 * dist <= img && img <= 1.5 * dist;
        lo = lo.min(img / dist);
        hi = hi.max(img / dist);
    }
    Ok(BiLipschitzCheck { pairs: pairs.len(), min_ratio: lo, max_ratio: hi, holds })
}

/// Smallest and largest singular values of the Jacobian over probe points.
pub fn jacobian_singular_range(map: &TransformMap, t: f64, points: &[Vec<f64>]) -> (f64, f64) {
    let d = map.dim();
    let mut jac = [0.0; MAX_DIM * MAX_DIM];
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in points {
        map.jacobian(t, x, &mut jac[..d * d]);
        let (a, b) = linalg::singular_range(&jac[..d * d], d);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::SpatialGrid;

    fn map_from(f: impl Fn(&[f64], &mut [f64]), dim: usize) -> TransformMap {
        let sp = SpatialGrid::new(dim, 81, 4.0).unwrap();
        TransformMap::new(GridFunction::from_fn(sp, alloc::vec![0.0, 1.0], dim, |_, x, o| f(x, o))).unwrap()
    }

    #[test]
    fn identity_and_translation_invert_exactly() {
        let id = map_from(|_, o| o.iter_mut().for_each(|v| *v = 0.0), 2);
        assert_eq!(invert_map(&id, 0.3, &[0.1, -0.2]).unwrap(), alloc::vec![0.1, -0.2]);
        let tr = map_from(|_, o| {
            o[0] = 0.25;
            o[1] = -0.5;
        }, 2);
        let x = invert_map(&tr, 0.3, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-14 && (x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn round_trip_for_a_smooth_map() {
        let m = map_from(|x, o| o[0] = 0.3 * libm::sin(x[0]), 1);
        assert!(m.grad_bound() <= 0.3 + 1e-12);
        for k in 0..50 {
            let y = -3.0 + 0.12 * k as f64;
            let x = invert_map(&m, 0.5, &[y]).unwrap();
            assert!((m.forward_vec(0.5, &x)[0] - y).abs() < 1e-8);
        }
    }

    #[test]
    fn non_contracting_base_is_refused() {
        let m = map_from(|x, o| o[0] = -1.5 * x[0], 1);
        assert!(matches!(invert_map(&m, 0.0, &[0.1]), Err(Error::Transform(_))));
    }
}
