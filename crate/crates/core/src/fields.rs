//! SDE coefficients as evaluatable fields, and probe-based checks of the structural
//! conditions placed on them (ellipticity, Hölder seminorms, bounded `a⁻¹`).
//!
//! Suprema over `ℝ^d` are not computable, so every check here is a supremum or
//! infimum over a declared finite probe set.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::linalg;
use crate::math::{exp, floor, pow, sq};
use crate::quadrature::gauss_legendre;

/// Default central-difference step for gradients of user scalar fields.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Gauss–Legendre order per axis used by [`mollify`].
pub const MOLLIFIER_ORDER: usize = 16;

/// Evaluator signature: `(t, x, out)`; `out` has length `d` (vector) or `d²` (row-major matrix).
pub type FieldFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// A drift `b(t, x) ∈ ℝ^d`.
    Vector,
    /// A diffusion `σ(t, x) ∈ ℝ^{d×d}`.
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regularity {
    Smooth,
    Hoelder { theta: f64 },
    Lps { p: f64, q: f64 },
    BoundedMeasurable,
}

#[derive(Clone)]
enum Repr {
    Constant(Arc<[f64]>),
    Dynamic(Arc<FieldFn>),
}

/// A drift or diffusion coefficient with its declared regularity metadata.
///
/// Times beyond the declared horizon are evaluated at the horizon, which is the
/// time extension `b(t, ·) = b(T, ·)` for `t ≥ T`.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    dim: usize,
    kind: FieldKind,
    regularity: Regularity,
    sup_norm: Option<f64>,
    hoelder_seminorm: Option<f64>,
    horizon: f64,
    time_dependent: bool,
    repr: Repr,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("regularity", &self.regularity)
            .field("constant", &self.is_constant())
            .finish()
    }
}

impl CoefficientField {
    fn build(name: &str, dim: usize, kind: FieldKind, repr: Repr) -> Self {
        assert!((1..=crate::MAX_DIM).contains(&dim), "dimension must be in 1..={}", crate::MAX_DIM);
        CoefficientField {
            name: name.to_string(),
            dim,
            kind,
            regularity: Regularity::Smooth,
            sup_norm: None,
            hoelder_seminorm: None,
            horizon: f64::INFINITY,
            time_dependent: false,
            repr,
        }
    }

    pub fn vector<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::build(name, dim, FieldKind::Vector, Repr::Dynamic(Arc::new(f)))
    }

    pub fn matrix<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::build(name, dim, FieldKind::Matrix, Repr::Dynamic(Arc::new(f)))
    }

    pub fn constant_vector(name: &str, value: &[f64]) -> Self {
        let norm = linalg::norm(value);
        Self::build(name, value.len(), FieldKind::Vector, Repr::Constant(value.into()))
            .with_sup_norm(norm)
            .with_hoelder_seminorm(0.0)
    }

    pub fn constant_matrix(name: &str, dim: usize, value: &[f64]) -> Self {
        assert_eq!(value.len(), dim * dim);
        let norm = linalg::hs_norm(value);
        Self::build(name, dim, FieldKind::Matrix, Repr::Constant(value.into()))
            .with_sup_norm(norm)
            .with_hoelder_seminorm(0.0)
    }

    pub fn zero_drift(dim: usize) -> Self {
        Self::constant_vector("zero", &alloc::vec![0.0; dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant_matrix("identity", dim, &linalg::identity(dim))
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn with_sup_norm(mut self, bound: f64) -> Self {
        self.sup_norm = Some(bound);
        self
    }

    pub fn with_hoelder_seminorm(mut self, bound: f64) -> Self {
        self.hoelder_seminorm = Some(bound);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// Marks the evaluator as genuinely time dependent (solvers then reassemble per step).
    pub fn time_dependent(mut self) -> Self {
        self.time_dependent = true;
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn sup_norm(&self) -> Option<f64> {
        self.sup_norm
    }

    pub fn hoelder_seminorm(&self) -> Option<f64> {
        self.hoelder_seminorm
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent && !self.is_constant()
    }

    /// Number of scalars written by [`eval`](Self::eval).
    pub fn output_len(&self) -> usize {
        match self.kind {
            FieldKind::Vector => self.dim,
            FieldKind::Matrix => self.dim * self.dim,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.repr, Repr::Constant(_))
    }

    pub fn constant_value(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Constant(v) => Some(v),
            Repr::Dynamic(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value().is_some_and(|v| v.iter().all(|&c| c == 0.0))
    }

    pub fn is_identity(&self) -> bool {
        self.kind == FieldKind::Matrix
            && self
                .constant_value()
                .is_some_and(|v| v == linalg::identity(self.dim).as_slice())
    }

    /// Raw evaluation into `out` (no finiteness check).
    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Constant(v) => out[..v.len()].copy_from_slice(v),
            Repr::Dynamic(f) => f(t.clamp(0.0, self.horizon), x, out),
        }
    }

    /// Evaluation with a finiteness check.
    pub fn eval_checked(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.output_len()];
        self.eval(t, x, &mut out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Evaluation { field: self.name.clone(), t, x: x.to_vec() })
        }
    }

    fn require_matrix(&self) -> Result<()> {
        if self.kind != FieldKind::Matrix {
            return arg_err(alloc::format!("field `{}` is not a matrix field", self.name));
        }
        Ok(())
    }
}

/// `a = σσ*` as a matrix field.
pub fn diffusion_matrix(sigma: &CoefficientField) -> Result<CoefficientField> {
    sigma.require_matrix()?;
    let d = sigma.dim();
    let name = alloc::format!("a[{}]", sigma.name);
    if let Some(v) = sigma.constant_value() {
        let mut a = alloc::vec![0.0; d * d];
        linalg::gram(v, d, &mut a);
        return Ok(CoefficientField::constant_matrix(&name, d, &a));
    }
    let inner = sigma.clone();
    let mut out = CoefficientField::matrix(&name, d, move |t, x, out| {
        let mut s = [0.0; crate::MAX_DIM * crate::MAX_DIM];
        inner.eval(t, x, &mut s[..d * d]);
        linalg::gram(&s, d, out);
    })
    .with_horizon(sigma.horizon());
    if sigma.time_dependent {
        out = out.time_dependent();
    }
    Ok(out)
}

/// A probe `(t, x, y)`: a time, a point and a direction (or second point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Probe {
    pub fn new(t: f64, x: &[f64], y: &[f64]) -> Self {
        Probe { t, x: x.to_vec(), y: y.to_vec() }
    }
}

/// Result of [`check_nondegeneracy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityWitness {
    /// Tightest lower constant: `min |σ(t,x)* y|²` over the probes.
    pub delta: f64,
    /// Tightest upper constant: `max |σ(t,x)* y|²` over the probes.
    pub kappa_upper: f64,
    pub probes: Vec<Probe>,
    /// `delta ≤ violation_tol · kappa_upper`.
    pub violated: bool,
    pub violation_tol: f64,
    /// Index of the probe attaining `delta`.
    pub argmin: usize,
    /// Per-component surrogate `Σ_{i,k} |σ^{ik} y_i|²`: its minimum over the probes.
    pub surrogate_delta: f64,
    pub surrogate_upper: f64,
    pub surrogate_violated: bool,
}

impl EllipticityWitness {
    pub fn argmin_probe(&self) -> &Probe {
        &self.probes[self.argmin]
    }
}

/// Relative tolerance below which a measured lower constant counts as zero.
pub const DEFAULT_VIOLATION_TOL: f64 = 1e-5;

/// Unit directions at one `(t, x)` with the given angular resolution.
///
/// `|σ*y|²` is even in `y`, so only a half sphere is sampled.
pub fn direction_probes(dim: usize, t: f64, x: &[f64], resolution: f64) -> Vec<Probe> {
    let pi = core::f64::consts::PI;
    let mut out = Vec::new();
    match dim {
        1 => out.push(Probe::new(t, x, &[1.0])),
        2 => {
            let n = libm::ceil(pi / resolution) as usize;
            for k in 0..n {
                let th = k as f64 * pi / n as f64;
                out.push(Probe::new(t, x, &[libm::cos(th), libm::sin(th)]));
            }
        }
        _ => {
            let n_pol = libm::ceil(pi / resolution) as usize;
            for i in 0..=n_pol {
                let th = i as f64 * pi / n_pol as f64;
                let ring = libm::ceil(pi * libm::sin(th) / resolution).max(1.0) as usize;
                for j in 0..ring {
                    let ph = j as f64 * pi / ring as f64;
                    let (s, c) = (libm::sin(th), libm::cos(th));
                    out.push(Probe::new(t, x, &[s * libm::cos(ph), s * libm::sin(ph), c]));
                }
            }
        }
    }
    out
}

/// Tightest `(δ, K)` with `δ|y|² ≤ |σ(t,x)* y|² ≤ K|y|²` over the probe set, together with
/// the per-component surrogate `Σ_{i,k} |σ^{ik} y_i|²`.
pub fn check_nondegeneracy(
    sigma: &CoefficientField,
    probes: &[Probe],
    violation_tol: f64,
) -> Result<EllipticityWitness> {
    sigma.require_matrix()?;
    if probes.is_empty() {
        return arg_err("nondegeneracy check needs at least one probe");
    }
    let d = sigma.dim();
    let mut delta = f64::INFINITY;
    let mut upper = 0.0f64;
    let mut argmin = 0;
    let mut s_lo = f64::INFINITY;
    let mut s_hi = 0.0f64;
    let mut sty = [0.0; crate::MAX_DIM];
    for (idx, p) in probes.iter().enumerate() {
        if p.x.len() != d || p.y.len() != d {
            return arg_err(alloc::format!("probe {idx} has the wrong dimension"));
        }
        if (linalg::norm(&p.y) - 1.0).abs() > 1e-9 {
            return arg_err(alloc::format!("probe {idx}: direction is not a unit vector"));
        }
        let s = sigma.eval_checked(p.t, &p.x)?;
        linalg::mat_t_vec(&s, d, &p.y, &mut sty);
        let q = linalg::dot(&sty[..d], &sty[..d]);
        if q < delta {
            delta = q;
            argmin = idx;
        }
        upper = upper.max(q);
        let mut sur = 0.0;
        for i in 0..d {
            for k in 0..d {
                sur += sq(s[i * d + k] * p.y[i]);
            }
        }
        s_lo = s_lo.min(sur);
        s_hi = s_hi.max(sur);
    }
    Ok(EllipticityWitness {
        delta,
        kappa_upper: upper,
        probes: probes.to_vec(),
        violated: delta <= violation_tol * upper,
        violation_tol,
        argmin,
        surrogate_delta: s_lo,
        surrogate_upper: s_hi,
        surrogate_violated: s_lo <= violation_tol * s_hi,
    })
}

/// Exact ellipticity range `(λ_min, λ_max)` of `a = σσ*` at one point.
pub fn ellipticity_at(sigma: &CoefficientField, t: f64, x: &[f64]) -> Result<(f64, f64)> {
    sigma.require_matrix()?;
    let d = sigma.dim();
    let s = sigma.eval_checked(t, x)?;
    let mut a = alloc::vec![0.0; d * d];
    linalg::gram(&s, d, &mut a);
    Ok(linalg::sym_eigen_range(&a, d))
}

/// A pair of points at a common time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `max |f(t,x) − f(t,y)| / |x − y|^θ` over the probe pairs (Euclidean / Hilbert–Schmidt norms).
pub fn check_hoelder_seminorm(f: &CoefficientField, theta: f64, pairs: &[PointPair]) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return arg_err("Hölder exponent must lie in (0, 1)");
    }
    if pairs.is_empty() {
        return arg_err("Hölder seminorm estimate needs at least one probe pair");
    }
    let mut best = 0.0f64;
    for (i, p) in pairs.iter().enumerate() {
        let dist = linalg::distance(&p.x, &p.y);
        if dist == 0.0 {
            return arg_err(alloc::format!("probe pair {i} has x = y"));
        }
        let fx = f.eval_checked(p.t, &p.x)?;
        let fy = f.eval_checked(p.t, &p.y)?;
        let diff = libm::sqrt(fx.iter().zip(&fy).map(|(a, b)| sq(a - b)).sum());
        best = best.max(diff / pow(dist, theta));
    }
    Ok(best)
}

/// `sup ‖a⁻¹(t,x)‖_HS` over the probe points.
pub fn check_inverse_diffusion_bound(sigma: &CoefficientField, points: &[(f64, Vec<f64>)]) -> Result<f64> {
    sigma.require_matrix()?;
    if points.is_empty() {
        return arg_err("inverse diffusion bound needs at least one probe");
    }
    let d = sigma.dim();
    let mut a = alloc::vec![0.0; d * d];
    let mut best = 0.0f64;
    for (t, x) in points {
        let s = sigma.eval_checked(*t, x)?;
        linalg::gram(&s, d, &mut a);
        let inv = linalg::inverse(&a, d).ok_or_else(|| Error::Singularity { t: *t, x: x.clone() })?;
        best = best.max(linalg::hs_norm(&inv));
    }
    Ok(best)
}

/// Standard bump `exp(−1/(1−|z|²))` on the unit ball.
fn bump(z2: f64) -> f64 {
    if z2 < 1.0 {
        exp(-1.0 / (1.0 - z2))
    } else {
        0.0
    }
}

/// `σⁿ = σ(t,·) ∗ ρ_n` with `ρ_n(z) = nᵈ ρ(nz)`.
///
/// The integral `∫ σ(w) ρ_n(x − w) dw` is discretized with [`MOLLIFIER_ORDER`]-point
/// Gauss–Legendre rules on a fixed lattice of cells of width `2/n` in `w`. The nodes do
/// not move with `x`, so `σⁿ` is smooth in `x` even for discontinuous `σ`. Dividing by
/// the discrete mass of `ρ_n` makes constants exact.
pub fn mollify(field: &CoefficientField, n: u32) -> Result<CoefficientField> {
    if n == 0 {
        return arg_err("mollification index n must be ≥ 1");
    }
    let name = alloc::format!("{}*rho_{}", field.name, n);
    if field.is_constant() {
        return Ok(field.clone().renamed(&name));
    }
    let d = field.dim();
    let (nodes, weights) = gauss_legendre(MOLLIFIER_ORDER);
    let rule = Arc::new(CellRule { nodes, weights, radius: 1.0 / n as f64 });
    let inner = field.clone();
    let len = field.output_len();
    let eval = move |t: f64, x: &[f64], out: &mut [f64]| rule.convolve(&inner, d, len, t, x, out);
    let mut out = match field.kind() {
        FieldKind::Vector => CoefficientField::vector(&name, d, eval),
        FieldKind::Matrix => CoefficientField::matrix(&name, d, eval),
    }
    .with_regularity(Regularity::Smooth)
    .with_horizon(field.horizon());
    if let Some(s) = field.sup_norm() {
        out = out.with_sup_norm(s);
    }
    if field.time_dependent {
        out = out.time_dependent();
    }
    Ok(out)
}

struct CellRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    radius: f64,
}

impl CellRule {
    /// Lattice nodes (position, weight) along one axis that can meet the support around `c`.
    fn axis(&self, c: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let width = 2.0 * self.radius;
        let first = floor((c - self.radius) / width) as i64;
        let last = floor((c + self.radius) / width) as i64;
        for k in first..=last {
            let mid = (k as f64 + 0.5) * width;
            for (z, w) in self.nodes.iter().zip(&self.weights) {
                let p = mid + 0.5 * width * z;
                if (p - c).abs() < self.radius {
                    out.push((p, 0.5 * width * w));
                }
            }
        }
    }

    fn convolve(&self, field: &CoefficientField, d: usize, len: usize, t: f64, x: &[f64], out: &mut [f64]) {
        let mut axes: [Vec<(f64, f64)>; crate::MAX_DIM] = Default::default();
        for i in 0..d {
            self.axis(x[i], &mut axes[i]);
        }
        let mut acc = [0.0; crate::MAX_DIM * crate::MAX_DIM];
        let mut buf = [0.0; crate::MAX_DIM * crate::MAX_DIM];
        let mut p = [0.0; crate::MAX_DIM];
        let mut mass = 0.0;
        let counts: Vec<usize> = axes[..d].iter().map(Vec::len).collect();
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            let mut r2 = 0.0;
            for i in 0..d {
                let (pos, wi) = axes[i][rem % counts[i]];
                rem /= counts[i];
                p[i] = pos;
                w *= wi;
                r2 += sq((x[i] - pos) / self.radius);
            }
            let rho = bump(r2);
            if rho == 0.0 {
                continue;
            }
            let wk = w * rho;
            mass += wk;
            field.eval(t, &p[..d], &mut buf[..len]);
            for j in 0..len {
                acc[j] += wk * buf[j];
            }
        }
        for j in 0..len {
            out[j] = acc[j] / mass;
        }
    }
}

/// Central-difference gradient of a scalar function.
pub fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64, out: &mut [f64]) {
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

/// Carré du champ `Γ(t)(f, g) = ½⟨σ(t,x)*∇f, σ(t,x)*∇g⟩` with central-difference gradients.
pub fn carre_du_champ(
    sigma: &CoefficientField,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    t: f64,
    x: &[f64],
    h: f64,
) -> Result<f64> {
    sigma.require_matrix()?;
    let d = sigma.dim();
    if x.len() != d {
        return arg_err("point has the wrong dimension");
    }
    let s = sigma.eval_checked(t, x)?;
    let mut gf = [0.0; crate::MAX_DIM];
    let mut gg = [0.0; crate::MAX_DIM];
    central_gradient(f, x, h, &mut gf[..d]);
    central_gradient(g, x, h, &mut gg[..d]);
    let mut sf = [0.0; crate::MAX_DIM];
    let mut sg = [0.0; crate::MAX_DIM];
    linalg::mat_t_vec(&s, d, &gf, &mut sf);
    linalg::mat_t_vec(&s, d, &gg, &mut sg);
    Ok(0.5 * linalg::dot(&sf[..d], &sg[..d]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn diag12() -> CoefficientField {
        CoefficientField::constant_matrix("diag", 2, &[1.0, 0.0, 0.0, 2.0])
    }

    #[test]
    fn footnote_matrix_fails_correct_condition_but_passes_surrogate() {
        let s = CoefficientField::constant_matrix("footnote", 2, &[1.0, -1.0, -1.0, 1.0]);
        let probes = direction_probes(2, 0.0, &[0.0, 0.0], 1e-3);
        let w = check_nondegeneracy(&s, &probes, DEFAULT_VIOLATION_TOL).unwrap();
        assert!(w.violated);
        assert!(w.delta < 1e-6);
        assert!(!w.surrogate_violated);
        assert!((w.surrogate_delta - 2.0).abs() < 1e-12);
        let y = &w.argmin_probe().y;
        let diag = libm::sqrt(0.5);
        assert!((y[0] - diag).abs() < 1e-3 && (y[1] - diag).abs() < 1e-3);
    }

    #[test]
    fn identity_has_unit_constants() {
        let probes = direction_probes(2, 0.0, &[0.3, -1.0], 1e-2);
        let w = check_nondegeneracy(&CoefficientField::identity(2), &probes, DEFAULT_VIOLATION_TOL).unwrap();
        assert!((w.delta - 1.0).abs() < 1e-12 && (w.kappa_upper - 1.0).abs() < 1e-12);
        assert!(!w.violated);
    }

    #[test]
    fn diag_constants_match_brute_force_angular_grid() {
        // brute force over a much finer grid than the probes
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..200_000 {
            let th = k as f64 * core::f64::consts::PI / 200_000.0;
            let q = sq(libm::cos(th)) + 4.0 * sq(libm::sin(th));
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let probes = direction_probes(2, 0.0, &[0.0, 0.0], 1e-3);
        let w = check_nondegeneracy(&diag12(), &probes, DEFAULT_VIOLATION_TOL).unwrap();
        assert!((w.delta - lo).abs() < 1e-9 && (lo - 1.0).abs() < 1e-9);
        assert!((w.kappa_upper - hi).abs() < 1e-5 && (hi - 4.0).abs() < 1e-9);
    }

    #[test]
    fn nondegeneracy_rejects_bad_input() {
        let probes = [Probe::new(0.0, &[0.0, 0.0], &[1.0, 1.0])];
        assert!(matches!(
            check_nondegeneracy(&diag12(), &probes, DEFAULT_VIOLATION_TOL),
            Err(Error::Argument(_))
        ));
        assert!(check_nondegeneracy(&diag12(), &[], DEFAULT_VIOLATION_TOL).is_err());
        let drift = CoefficientField::zero_drift(2);
        let ok = [Probe::new(0.0, &[0.0, 0.0], &[1.0, 0.0])];
        assert!(check_nondegeneracy(&drift, &ok, DEFAULT_VIOLATION_TOL).is_err());
        let nan = CoefficientField::matrix("nan", 1, |_, _, o| o[0] = f64::NAN);
        assert!(matches!(
            check_nondegeneracy(&nan, &[Probe::new(0.0, &[0.0], &[1.0])], DEFAULT_VIOLATION_TOL),
            Err(Error::Evaluation { .. })
        ));
    }

    #[test]
    fn hoelder_seminorm_of_root_approaches_one() {
        let f = CoefficientField::vector("root", 1, |_, x, o| o[0] = libm::sqrt(x[0].abs()));
        let pairs: Vec<PointPair> = [1e-6, 1e-3, 0.1, 0.5, 1.0]
            .iter()
            .map(|h| PointPair { t: 0.0, x: vec![0.0], y: vec![*h] })
            .collect();
        let s = check_hoelder_seminorm(&f, 0.5, &pairs).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hoelder_seminorm_edge_cases() {
        let c = CoefficientField::constant_vector("c", &[3.0]);
        let pairs = [PointPair { t: 0.0, x: vec![0.0], y: vec![0.7] }];
        assert_eq!(check_hoelder_seminorm(&c, 0.5, &pairs).unwrap(), 0.0);
        let lin = CoefficientField::vector("lin", 1, |_, x, o| o[0] = x[0]);
        let pairs: Vec<PointPair> = (1..=100)
            .map(|k| PointPair { t: 0.0, x: vec![-0.5], y: vec![-0.5 + k as f64 / 100.0] })
            .collect();
        assert!(check_hoelder_seminorm(&lin, 0.5, &pairs).unwrap() <= 1.0 + 1e-15);
        assert!(check_hoelder_seminorm(&lin, 0.5, &[]).is_err());
        let same = [PointPair { t: 0.0, x: vec![1.0], y: vec![1.0] }];
        assert!(check_hoelder_seminorm(&lin, 0.5, &same).is_err());
    }

    #[test]
    fn inverse_diffusion_bounds() {
        let pts = vec![(0.0, vec![0.0, 0.0]), (1.0, vec![2.0, -1.0])];
        let id = check_inverse_diffusion_bound(&CoefficientField::identity(2), &pts).unwrap();
        assert!((id - libm::sqrt(2.0)).abs() < 1e-14);
        let two = CoefficientField::constant_matrix("2id", 1, &[2.0]);
        assert!((check_inverse_diffusion_bound(&two, &[(0.0, vec![0.0])]).unwrap() - 0.25).abs() < 1e-15);
        let d = check_inverse_diffusion_bound(&diag12(), &pts).unwrap();
        assert!((d - libm::sqrt(1.0 + 1.0 / 16.0)).abs() < 1e-14);
        let fm = CoefficientField::constant_matrix("footnote", 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(matches!(check_inverse_diffusion_bound(&fm, &pts), Err(Error::Singularity { .. })));
    }

    #[test]
    fn mollified_constant_is_unchanged() {
        let c = CoefficientField::constant_matrix("c", 1, &[1.7]);
        let m = mollify(&c, 3).unwrap();
        assert_eq!(m.eval_checked(0.0, &[0.4]).unwrap(), vec![1.7]);
        // a dynamic constant goes through the quadrature path
        let dynamic = CoefficientField::matrix("dc", 2, |_, _, o| o.copy_from_slice(&[1.5, 0.0, 0.0, 1.5]));
        let m = mollify(&dynamic, 2).unwrap();
        let v = m.eval_checked(0.0, &[0.1, 0.2]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-14 && v[1].abs() < 1e-15);
        assert!(mollify(&c, 0).is_err());
    }

    #[test]
    fn mollified_sign_converges_away_from_the_jump() {
        let sign = CoefficientField::vector("sign", 1, |_, x, o| o[0] = if x[0] >= 0.0 { 1.0 } else { -1.0 });
        let x = 0.05;
        let errs: Vec<f64> = [2u32, 8, 32, 128]
            .iter()
            .map(|&n| (mollify(&sign, n).unwrap().eval_checked(0.0, &[x]).unwrap()[0] - 1.0).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        // support radius 1/32 < 0.05: the convolution only sees +1
        assert!(errs[2] < 1e-14 && errs[3] < 1e-14);
        assert!(errs[0] > 0.1);
    }

    #[test]
    fn mollification_has_finite_probe_lipschitz_constant() {
        let sign = CoefficientField::vector("sign", 1, |_, x, o| o[0] = if x[0] >= 0.0 { 1.0 } else { -1.0 });
        let m = mollify(&sign, 4).unwrap();
        let mut lip = 0.0f64;
        for k in 0..400 {
            let a = -1.0 + k as f64 / 200.0;
            let b = a + 1e-3;
            let fa = m.eval_checked(0.0, &[a]).unwrap()[0];
            let fb = m.eval_checked(0.0, &[b]).unwrap()[0];
            lip = lip.max((fa - fb).abs() / 1e-3);
        }
        assert!(lip.is_finite() && lip < 100.0);
    }

    #[test]
    fn carre_du_champ_examples() {
        let id = CoefficientField::identity(2);
        let x1 = |p: &[f64]| p[0];
        let x2 = |p: &[f64]| p[1];
        let one = |_: &[f64]| 1.0;
        let v = carre_du_champ(&id, &x1, &x1, 0.0, &[0.2, 0.3], DEFAULT_FD_STEP).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
        assert_eq!(carre_du_champ(&id, &one, &x1, 0.0, &[0.2, 0.3], DEFAULT_FD_STEP).unwrap(), 0.0);
        let v = carre_du_champ(&diag12(), &x2, &x2, 0.0, &[0.2, 0.3], DEFAULT_FD_STEP).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn horizon_extends_time_constantly() {
        let f = CoefficientField::vector("tb", 1, |t, _, o| o[0] = t)
            .with_horizon(2.0)
            .time_dependent();
        assert_eq!(f.eval_checked(5.0, &[0.0]).unwrap(), vec![2.0]);
        assert!(f.is_time_dependent());
    }
}
