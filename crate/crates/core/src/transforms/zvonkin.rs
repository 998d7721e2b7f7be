//! `Φ_r(x) = x + u(r, x)` with `u` solving the backward system on `[0, T₀]`. Under
//! `Y_r = Φ_r(X_r)` the equation loses its drift and has diffusion
//! `Σ(r, y) = ((I + ∇u)σ)(r, Φ_r⁻¹(y))`.

use serde::{Deserialize, Serialize};

use super::TransformMap;
use crate::error::{arg_err, Error, Result};
use crate::fields::{diffusion_matrix, CoefficientField, FieldKind};
use crate::linalg;
use crate::pde::{solve_backward_system, PdeSolutionReport, SpaceTimeGrid};
use crate::MAX_DIM;

/// Largest number of times `T₀` is halved.
pub const MAX_HALVINGS: usize = 8;

#[derive(Clone, Debug)]
pub struct ZvonkinTransform {
    pub map: TransformMap,
    pub report: PdeSolutionReport,
    pub sigma: CoefficientField,
    pub summary: ZvonkinSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZvonkinSummary {
    /// Horizon actually used.
    pub t0: f64,
    pub halvings: usize,
    /// `(T₀, gradient bound)` for every attempt.
    pub attempts: alloc::vec::Vec<(f64, f64)>,
    pub grad_bound: f64,
}

/// Solves the backward system (drift included in the generator) on `[s, s + T₀]`, halving
/// `T₀` until the gradient bound of `u` is at most ½.
pub fn build_zvonkin(sigma: &CoefficientField, b: &CoefficientField, grid: &SpaceTimeGrid) -> Result<ZvonkinTransform> {
    if sigma.kind() != FieldKind::Matrix || b.kind() != FieldKind::Vector || sigma.dim() != b.dim() {
        return arg_err("Zvonkin map needs a d × d diffusion and a d-dimensional drift");
    }
    let a = diffusion_matrix(sigma)?;
    let full = grid.t_end - grid.t_start;
    let mut attempts = alloc::vec::Vec::new();
    for halvings in 0..=MAX_HALVINGS {
        let t0 = full / (1u64 << halvings) as f64;
        let g = SpaceTimeGrid::new(
            grid.space.dim,
            grid.space.m,
            grid.space.half_width,
            grid.t_start,
            grid.t_start + t0,
            grid.steps,
        )?;
        let (u, report) = solve_backward_system(&a, b, &g, true)?;
        let map = TransformMap::new(u)?;
        attempts.push((t0, map.grad_bound()));
        if map.grad_bound() <= 0.5 {
            let summary = ZvonkinSummary { t0, halvings, attempts, grad_bound: map.grad_bound() };
            return Ok(ZvonkinTransform { map, report, sigma: sigma.clone(), summary });
        }
    }
    let best = attempts.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    Err(Error::Transform(alloc::format!(
        "gradient bound stayed above 1/2 after {MAX_HALVINGS} halvings (best {best})"
    )))
}

impl ZvonkinTransform {
    pub fn t0(&self) -> f64 {
        self.summary.t0
    }

    /// `Σ(r, y) = ((I + ∇u)σ)(r, Φ_r⁻¹(y))`; NaN where the inversion fails.
    pub fn transformed_diffusion(&self) -> CoefficientField {
        let map = self.map.clone();
        let sigma = self.sigma.clone();
        let d = map.dim();
        CoefficientField::matrix("zvonkin-sigma", d, move |t, y, out| {
            let mut x = [0.0; MAX_DIM];
            if map.invert_into(t, y, &mut x[..d]).is_err() {
                out.iter_mut().for_each(|v| *v = f64::NAN);
                return;
            }
            let mut j = [0.0; MAX_DIM * MAX_DIM];
            let mut s = [0.0; MAX_DIM * MAX_DIM];
            map.jacobian(t, &x[..d], &mut j[..d * d]);
            sigma.eval(t, &x[..d], &mut s[..d * d]);
            linalg::mat_mul(&j, &s, d, out);
        })
        .with_horizon(self.t0())
        .time_dependent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{check_nondegeneracy, direction_probes, DEFAULT_VIOLATION_TOL};

    #[test]
    fn zero_drift_gives_identity_map() {
        let g = SpaceTimeGrid::new(1, 41, 4.0, 0.0, 1.0, 16).unwrap();
        let z = build_zvonkin(&CoefficientField::identity(1), &CoefficientField::zero_drift(1), &g).unwrap();
        assert_eq!(z.summary.halvings, 0);
        assert_eq!(z.map.forward_vec(0.2, &[0.7]), alloc::vec![0.7]);
        let s = z.transformed_diffusion().eval_checked(0.1, &[0.3]).unwrap();
        assert_eq!(s, alloc::vec![1.0]);
    }

    #[test]
    fn strong_drift_forces_halving_and_keeps_ellipticity() {
        let b = CoefficientField::vector("bump", 1, |_, x, o| o[0] = 3.0 * libm::exp(-x[0] * x[0]));
        let g = SpaceTimeGrid::new(1, 161, 6.0, 0.0, 2.0, 64).unwrap();
        let z = build_zvonkin(&CoefficientField::identity(1), &b, &g).unwrap();
        assert!(z.summary.halvings > 0);
        assert!(z.map.grad_bound() <= 0.5);
        // δ/4 ≤ |Σ* y|² ≤ 9K/4 with δ = K = 1
        let sig = z.transformed_diffusion();
        for x in [-2.0, -0.5, 0.0, 0.4, 1.3] {
            let probes = direction_probes(1, 0.5 * z.t0(), &[x], 0.1);
            let w = check_nondegeneracy(&sig, &probes, DEFAULT_VIOLATION_TOL).unwrap();
            assert!(w.delta >= 0.25 && w.kappa_upper <= 2.25);
        }
    }
}
