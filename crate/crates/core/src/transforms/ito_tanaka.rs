//! `Ψ(t, x) = x + ψ_λ(t, x)` with `ψ_λ` the bounded solution of
//! `∂_t ψ + L_t ψ − λψ = −b`. Then `X̂_t = Ψ_t(X_t)` solves `dX̂ = σ̂ dW + b̂ dt` with
//! `σ̂ = (∇Ψ σ)∘Ψ⁻¹` and `b̂ = λψ∘Ψ⁻¹`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::constants::{ConstantInputs, HarnackConstants};
use super::TransformMap;
use crate::error::{arg_err, Error, Result};
use crate::fields::{check_inverse_diffusion_bound, diffusion_matrix, CoefficientField, FieldKind};
use crate::linalg;
use crate::math::sqrt;
use crate::pde::{solve_resolvent_system, GridFunction, PdeSolutionReport, SpaceTimeGrid};
use crate::rng::derive_seed;
use crate::sde::{simulate_paths, EnsembleSpec, SdeProblem};
use crate::stats::{ks_critical_two_sample, ks_two_sample};
use crate::MAX_DIM;

/// `λ ∈ {1, 4, 16, …, 4⁸}`.
pub const DEFAULT_LAMBDA_SCHEDULE: [f64; 9] = [1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0];

/// Step for central differences of `σ` when measuring `‖∇σ‖₀`.
const SIGMA_FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaAttempt {
    pub lambda: f64,
    pub sup_grad: f64,
    pub grad_bound: f64,
}

#[derive(Clone, Debug)]
pub struct ItoTanakaTransform {
    pub map: TransformMap,
    pub lambda: f64,
    pub report: PdeSolutionReport,
    pub constants: HarnackConstants,
    pub attempts: Vec<LambdaAttempt>,
    pub sigma: CoefficientField,
}

/// Runs the resolvent system along `schedule` and keeps the first `λ` whose gradient
/// bound is at most ½.
pub fn build_ito_tanaka(
    sigma: &CoefficientField,
    b: &CoefficientField,
    grid: &SpaceTimeGrid,
    schedule: &[f64],
) -> Result<ItoTanakaTransform> {
    if sigma.kind() != FieldKind::Matrix || b.kind() != FieldKind::Vector || sigma.dim() != b.dim() {
        return arg_err("Itô–Tanaka map needs a d × d diffusion and a d-dimensional drift");
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return arg_err("λ schedule must be nonempty and increasing");
    }
    let a = diffusion_matrix(sigma)?;
    let minus_b = negated(b);
    let mut attempts = Vec::new();
    for &lambda in schedule {
        let (psi, report) = solve_resolvent_system(&a, b, &minus_b, lambda, grid)?;
        let map = TransformMap::new(psi)?;
        attempts.push(LambdaAttempt { lambda, sup_grad: map.sup_grad(), grad_bound: map.grad_bound() });
        if map.grad_bound() <= 0.5 {
            let constants = HarnackConstants::from_inputs(measure_inputs(&map, sigma, lambda)?);
            return Ok(ItoTanakaTransform { map, lambda, report, constants, attempts, sigma: sigma.clone() });
        }
    }
    let best = attempts.iter().map(|a| a.grad_bound).fold(f64::INFINITY, f64::min);
    Err(Error::Transform(alloc::format!(
        "no scheduled λ brought the gradient bound to 1/2 (smallest achieved {best})"
    )))
}

fn negated(b: &CoefficientField) -> CoefficientField {
    let name = alloc::format!("-{}", b.name());
    if let Some(v) = b.constant_value() {
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        return CoefficientField::constant_vector(&name, &neg);
    }
    let inner = b.clone();
    let mut out = CoefficientField::vector(&name, b.dim(), move |t, x, o| {
        inner.eval(t, x, o);
        o.iter_mut().for_each(|v| *v = -*v);
    })
    .with_horizon(b.horizon());
    if b.is_time_dependent() {
        out = out.time_dependent();
    }
    out
}

/// Grid-node suprema entering `(K₁, κ₁, δ₁)`.
fn measure_inputs(map: &TransformMap, sigma: &CoefficientField, lambda: f64) -> Result<ConstantInputs> {
    let psi: &GridFunction = map.base();
    let sp = psi.space;
    let d = sp.dim;
    let grad = psi.nodal_gradient();
    let mut x = [0.0; 2];
    let mut s = [0.0; MAX_DIM * MAX_DIM];
    let mut sp_ = [0.0; MAX_DIM * MAX_DIM];
    let mut sm = [0.0; MAX_DIM * MAX_DIM];
    let mut sup_hess = 0.0f64;
    let mut sup_sigma = 0.0f64;
    let mut sup_jac = 0.0f64;
    let mut sup_gsig = 0.0f64;
    let mut mixed = 0.0f64;
    let mut points = Vec::with_capacity(psi.n_slices() * sp.n_nodes());
    for (k, &t) in psi.times.iter().enumerate() {
        let hess = psi.sup_hessian_slice(k);
        let (mut sig_k, mut jac_k, mut gsig_k) = (0.0f64, 0.0f64, 0.0f64);
        for node in 0..sp.n_nodes() {
            sp.point(node, &mut x);
            points.push((t, x[..d].to_vec()));
            sigma.eval(t, &x[..d], &mut s[..d * d]);
            sig_k = sig_k.max(linalg::hs_norm(&s[..d * d]));
            let g = grad.at_node(k, node);
            let mut j = [0.0; MAX_DIM * MAX_DIM];
            j[..d * d].copy_from_slice(g);
            for i in 0..d {
                j[i * d + i] += 1.0;
            }
            jac_k = jac_k.max(linalg::hs_norm(&j[..d * d]));
            if !sigma.is_constant() {
                let mut total = 0.0;
                for ax in 0..d {
                    let mut p = x;
                    p[ax] += SIGMA_FD_STEP;
                    sigma.eval(t, &p[..d], &mut sp_[..d * d]);
                    p[ax] -= 2.0 * SIGMA_FD_STEP;
                    sigma.eval(t, &p[..d], &mut sm[..d * d]);
                    for i in 0..d * d {
                        let v = (sp_[i] - sm[i]) / (2.0 * SIGMA_FD_STEP);
                        total += v * v;
                    }
                }
                gsig_k = gsig_k.max(sqrt(total));
            }
        }
        sup_hess = sup_hess.max(hess);
        sup_sigma = sup_sigma.max(sig_k);
        sup_jac = sup_jac.max(jac_k);
        sup_gsig = sup_gsig.max(gsig_k);
        mixed = mixed.max(hess * sig_k + jac_k * gsig_k);
    }
    let inv_a_bound = check_inverse_diffusion_bound(sigma, &points)?;
    Ok(ConstantInputs {
        dim: d,
        lambda,
        sup_hessian_psi: sup_hess,
        sup_sigma,
        sup_jacobian: sup_jac,
        sup_grad_sigma: sup_gsig,
        inv_a_bound,
        mixed_term: mixed,
        measured_on: "grid".into(),
    })
}

impl ItoTanakaTransform {
    pub fn horizon(&self) -> f64 {
        *self.map.base().times.last().expect("at least one slice")
    }

    /// `σ̂(t, x) = (I + ∇ψ)(t, Ψ_t⁻¹x) σ(t, Ψ_t⁻¹x)`; NaN where the inversion fails.
    pub fn transformed_diffusion(&self) -> CoefficientField {
        let map = self.map.clone();
        let sigma = self.sigma.clone();
        let d = map.dim();
        CoefficientField::matrix("ito-tanaka-sigma", d, move |t, y, out| {
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
        .time_dependent()
    }

    /// `b̂(t, x) = λ ψ(t, Ψ_t⁻¹x)`; NaN where the inversion fails.
    pub fn transformed_drift(&self) -> CoefficientField {
        let map = self.map.clone();
        let lambda = self.lambda;
        let d = map.dim();
        CoefficientField::vector("ito-tanaka-drift", d, move |t, y, out| {
            let mut x = [0.0; MAX_DIM];
            if map.invert_into(t, y, &mut x[..d]).is_err() {
                out.iter_mut().for_each(|v| *v = f64::NAN);
                return;
            }
            map.base().eval(t, &x[..d], out);
            out.iter_mut().for_each(|v| *v *= lambda);
        })
        .time_dependent()
    }

    /// The conjugate equation `dX̂ = σ̂ dW + b̂ dt` on `[0, horizon]`.
    pub fn conjugate_problem(&self, horizon: f64) -> Result<SdeProblem> {
        SdeProblem::brownian(self.transformed_drift(), self.transformed_diffusion(), horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub t: f64,
    pub n_direct: usize,
    pub n_conjugate: usize,
    pub ks_per_coordinate: Vec<f64>,
    pub ks_max: f64,
    /// Two-sample KS critical value at the 1% level.
    pub ks_critical: f64,
}

/// Compares the law of `Ψ_t(X_t)` (direct simulation) with that of `X̂_t` started at
/// `Ψ_0(x₀)`, coordinate by coordinate.
pub fn pushforward_consistency(
    problem: &SdeProblem,
    map: &TransformMap,
    conjugate: &SdeProblem,
    x0: &[f64],
    t: f64,
    spec: &EnsembleSpec,
) -> Result<PushforwardReport> {
    let d = problem.dim();
    let spec = spec.clone().save_at(&[t]);
    let direct = simulate_paths(problem, x0, &spec)?;
    let start = map.forward_vec(0.0, x0);
    let conj_spec = spec.clone().with_seed(derive_seed(spec.seed, 0x5075_7368));
    let hat = simulate_paths(conjugate, &start, &conj_spec)?;
    let mut mapped = alloc::vec![0.0; d];
    let mut per = Vec::with_capacity(d);
    for c in 0..d {
        let mut a: Vec<f64> = direct
            .states_at(0)
            .map(|x| {
                map.forward(t, x, &mut mapped);
                mapped[c]
            })
            .collect();
        let mut b = hat.coordinate(0, c);
        per.push(ks_two_sample(&mut a, &mut b)?);
    }
    let ks_max = per.iter().copied().fold(0.0, f64::max);
    Ok(PushforwardReport {
        t,
        n_direct: direct.n_paths(),
        n_conjugate: hat.n_paths(),
        ks_per_coordinate: per,
        ks_max,
        ks_critical: ks_critical_two_sample(0.01, direct.n_paths(), hat.n_paths()),
    })
}
