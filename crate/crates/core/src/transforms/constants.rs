//! Explicit Harnack constants `(K₁, κ₁, δ₁)` for the transformed equation and probe
//! certificates of the monotonicity, ellipticity and `(σ(x) − σ(y))(x − y)` conditions.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::fields::{CoefficientField, PointPair};
use crate::linalg;
use crate::math::{sq, sqrt};
use crate::MAX_DIM;

/// Relative slack allowed when comparing probe constants with formula constants.
pub const CONSTANT_SLACK: f64 = 0.05;

/// Norms entering the constant formulas, all measured on grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantInputs {
    pub dim: usize,
    pub lambda: f64,
    /// `sup_t ‖∇²ψ_t‖₀`.
    pub sup_hessian_psi: f64,
    /// `‖σ‖₀`.
    pub sup_sigma: f64,
    /// `sup_t ‖∇Ψ_t‖₀ = sup_t ‖I + ∇ψ_t‖₀`.
    pub sup_jacobian: f64,
    /// `sup_t ‖∇σ(t, ·)‖₀` (central differences).
    pub sup_grad_sigma: f64,
    /// `‖a⁻¹‖₀`.
    pub inv_a_bound: f64,
    /// `sup_t (‖∇²ψ_t‖₀‖σ(t,·)‖₀ + ‖∇Ψ_t‖₀‖∇σ(t,·)‖₀)`, taken slice by slice.
    pub mixed_term: f64,
    pub measured_on: alloc::string::String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackConstants {
    pub k1: f64,
    pub kappa1: f64,
    pub delta1: f64,
    pub lambda: f64,
    pub inputs: ConstantInputs,
}

impl HarnackConstants {
    /// `K₁ = 4·mixed² + 2λ`, `κ₁ = (4√d‖a⁻¹‖₀)^{−1/2}`, `δ₁ = (2d + 1)‖σ‖₀`.
    pub fn from_inputs(inputs: ConstantInputs) -> Self {
        let d = inputs.dim as f64;
        HarnackConstants {
            k1: 4.0 * sq(inputs.mixed_term) + 2.0 * inputs.lambda,
            kappa1: 1.0 / sqrt(4.0 * sqrt(d) * inputs.inv_a_bound),
            delta1: (2.0 * d + 1.0) * inputs.sup_sigma,
            lambda: inputs.lambda,
            inputs,
        }
    }
}

/// Tightest probe constants for the transformed coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCertificate {
    /// `max(0, max (‖σ̂(x) − σ̂(y)‖² + 2⟨b̂(x) − b̂(y), x − y⟩) / |x − y|²)`.
    pub k0: f64,
    /// `sqrt(min λ_min(σ̂σ̂*))` over the probe points.
    pub kappa0: f64,
    /// `max |(σ̂(x) − σ̂(y))(x − y)| / |x − y|`.
    pub delta0: f64,
    /// `max ‖σ̂‖_HS` over the probe points.
    pub sigma_hat_sup: f64,
    pub pairs: usize,
    pub points: usize,
}

fn eval(field: &CoefficientField, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
    field.eval(t, x, out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation { field: field.name().into(), t, x: x.to_vec() })
    }
}

/// Probe suprema `(K₀, κ₀, δ₀)` for `(σ̂, b̂)`. With `formula` given, the probe constants must
/// not exceed the formula constants beyond [`CONSTANT_SLACK`] (and `κ₀` must not fall below
/// `κ₁`), and `‖σ̂‖` must respect `(d + ½)‖σ‖₀`; otherwise a consistency error is returned.
pub fn verify_a1_a2_a3(
    sigma_hat: &CoefficientField,
    b_hat: &CoefficientField,
    pairs: &[PointPair],
    points: &[(f64, Vec<f64>)],
    formula: Option<&HarnackConstants>,
) -> Result<AssumptionCertificate> {
    if pairs.is_empty() || points.is_empty() {
        return arg_err("assumption check needs probe pairs and probe points");
    }
    let d = sigma_hat.dim();
    let mut sx = [0.0; MAX_DIM * MAX_DIM];
    let mut sy = [0.0; MAX_DIM * MAX_DIM];
    let mut bx = [0.0; MAX_DIM];
    let mut by = [0.0; MAX_DIM];
    let mut k0 = 0.0f64;
    let mut delta0 = 0.0f64;
    for p in pairs {
        let dist2: f64 = p.x.iter().zip(&p.y).map(|(a, b)| sq(a - b)).sum();
        if dist2 == 0.0 {
            return arg_err("probe pair with x = y");
        }
        eval(sigma_hat, p.t, &p.x, &mut sx[..d * d])?;
        eval(sigma_hat, p.t, &p.y, &mut sy[..d * d])?;
        eval(b_hat, p.t, &p.x, &mut bx[..d])?;
        eval(b_hat, p.t, &p.y, &mut by[..d])?;
        let mut ds = [0.0; MAX_DIM * MAX_DIM];
        for i in 0..d * d {
            ds[i] = sx[i] - sy[i];
        }
        let mut diff = [0.0; MAX_DIM];
        for i in 0..d {
            diff[i] = p.x[i] - p.y[i];
        }
        let mut inner = 0.0;
        for i in 0..d {
            inner += (bx[i] - by[i]) * diff[i];
        }
        k0 = k0.max((linalg::dot(&ds[..d * d], &ds[..d * d]) + 2.0 * inner) / dist2);
        let mut v = [0.0; MAX_DIM];
        linalg::mat_vec(&ds, d, &diff, &mut v);
        delta0 = delta0.max(linalg::norm(&v[..d]) / sqrt(dist2));
    }
    let mut kappa2 = f64::INFINITY;
    let mut sigma_sup = 0.0f64;
    let mut a = [0.0; MAX_DIM * MAX_DIM];
    for (t, x) in points {
        eval(sigma_hat, *t, x, &mut sx[..d * d])?;
        linalg::gram(&sx, d, &mut a[..d * d]);
        kappa2 = kappa2.min(linalg::sym_eigen_range(&a[..d * d], d).0);
        sigma_sup = sigma_sup.max(linalg::hs_norm(&sx[..d * d]));
    }
    let cert = AssumptionCertificate {
        k0,
        kappa0: sqrt(kappa2.max(0.0)),
        delta0,
        sigma_hat_sup: sigma_sup,
        pairs: pairs.len(),
        points: points.len(),
    };
    if let Some(c) = formula {
        let s = 1.0 + CONSTANT_SLACK;
        let bound = (d as f64 + 0.5) * c.inputs.sup_sigma;
        let mut problems = Vec::new();
        if cert.k0 > s * c.k1 {
            problems.push(alloc::format!("K0 = {} > K1 = {}", cert.k0, c.k1));
        }
        if cert.kappa0 * s < c.kappa1 {
            problems.push(alloc::format!("kappa0 = {} < kappa1 = {}", cert.kappa0, c.kappa1));
        }
        if cert.delta0 > s * c.delta1 {
            problems.push(alloc::format!("delta0 = {} > delta1 = {}", cert.delta0, c.delta1));
        }
        if cert.sigma_hat_sup > s * bound {
            problems.push(alloc::format!("sup |sigma_hat| = {} > (d + 1/2)|sigma|_0 = {bound}", cert.sigma_hat_sup));
        }
        if !problems.is_empty() {
            return Err(Error::Consistency(problems.join("; ")));
        }
    }
    Ok(cert)
}
