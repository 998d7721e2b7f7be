//! Harnack-type inequality instances with three-valued verdicts.
//!
//! Each instance compares Monte Carlo confidence intervals of the two sides: `Holds` when the
//! left upper bound is below the right lower bound, `Violated` when the left lower bound is
//! above the right upper bound, `Inconclusive` otherwise.

pub mod interpolation;
pub mod stable;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use interpolation::{verify_interpolation_identity, InterpolationConfig, InterpolationReport};
pub use stable::{
    fit_stable_constant, harnack_constant_from_kernel, kernel_profile, verify_kernel_bounds, verify_stable_harnack,
    KernelBoundsReport, StableSweepFit,
};

use crate::error::{arg_err, Error, Result};
use crate::linalg;
use crate::math::{exp, expm1, log, pow, sq, sqrt};
use crate::rng::derive_seed;
use crate::sde::SdeProblem;
use crate::semigroup::{estimate_functional, Functional, McConfig, TestFunction};
use crate::stats::McEstimate;
use crate::transforms::HarnackConstants;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatementId {
    /// `P_t log f(y) ≤ log P_t f(x) + C|y − x|²/(δt)` with a fitted `C`.
    #[serde(rename = "log-harnack-fitted")]
    LogFitted,
    /// `T_{s,t} log f(y) ≤ log T_{s,t} f(x) + C₁|y − x|²/(2δ(t − s))`.
    #[serde(rename = "log-harnack-short-time")]
    LogShortTime,
    /// `P_t log f(y) ≤ log P_t f(x) + 2K|x − y|²/(κ²(1 − e^{−Kt}))`.
    #[serde(rename = "log-harnack-explicit")]
    LogExplicit,
    /// `(P_t f(y))^p ≤ P_t f^p(x) exp(K√p(√p−1)|x−y|² / (δ_p[(√p−1)κ − δ_p](1 − e^{−Kt})))`.
    #[serde(rename = "power-harnack-explicit")]
    PowerExplicit,
    /// `P_t log f(y) ≤ log P_t f(x) + K|x − y|²/(2κ²(1 − e^{−Kt}))` for monotone coefficients.
    #[serde(rename = "log-harnack-monotone")]
    LogMonotone,
    /// The explicit power form with `4δ_p` in the denominator, for monotone coefficients.
    #[serde(rename = "power-harnack-monotone")]
    PowerMonotone,
    /// `P_T f(x) ≤ C(1 + |x − y|/(T∧1)^{1/α})^{d+α} P_T f(y)` for α-stable noise.
    #[serde(rename = "stable-harnack")]
    Stable,
}

impl StatementId {
    pub const ALL: [StatementId; 7] = [
        StatementId::LogFitted,
        StatementId::LogShortTime,
        StatementId::LogExplicit,
        StatementId::PowerExplicit,
        StatementId::LogMonotone,
        StatementId::PowerMonotone,
        StatementId::Stable,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StatementId::LogFitted => "log-harnack-fitted",
            StatementId::LogShortTime => "log-harnack-short-time",
            StatementId::LogExplicit => "log-harnack-explicit",
            StatementId::PowerExplicit => "power-harnack-explicit",
            StatementId::LogMonotone => "log-harnack-monotone",
            StatementId::PowerMonotone => "power-harnack-monotone",
            StatementId::Stable => "stable-harnack",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }

    pub fn is_log(&self) -> bool {
        matches!(
            self,
            StatementId::LogFitted | StatementId::LogShortTime | StatementId::LogExplicit | StatementId::LogMonotone
        )
    }

    pub fn is_power(&self) -> bool {
        matches!(self, StatementId::PowerExplicit | StatementId::PowerMonotone)
    }

    /// Statements whose constants come from formulas rather than from a fit.
    pub fn is_explicit(&self) -> bool {
        matches!(
            self,
            StatementId::LogShortTime
                | StatementId::LogExplicit
                | StatementId::PowerExplicit
                | StatementId::LogMonotone
                | StatementId::PowerMonotone
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// One side of an inequality: point value and confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub mean: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Side {
    pub fn exact(v: f64) -> Self {
        Side { mean: v, stderr: 0.0, lo: v, hi: v }
    }

    pub fn from_estimate(e: &McEstimate) -> Self {
        Side { mean: e.mean, stderr: e.stderr, lo: e.lower(), hi: e.upper() }
    }

    /// `log` of a positive estimate, interval mapped endpoint by endpoint.
    pub fn log_of(e: &McEstimate) -> Self {
        let lo = e.lower();
        Side {
            mean: log(e.mean),
            stderr: e.stderr / e.mean,
            lo: if lo > 0.0 { log(lo) } else { f64::NEG_INFINITY },
            hi: log(e.upper()),
        }
    }

    pub fn shifted(self, c: f64) -> Self {
        Side { mean: self.mean + c, stderr: self.stderr, lo: self.lo + c, hi: self.hi + c }
    }

    /// Multiplication by `e^{c}`, clamping the lower end at 0.
    pub fn scaled_exp(self, c: f64) -> Self {
        let k = exp(c);
        let mul = |v: f64| if v <= 0.0 { 0.0 } else { v * k };
        Side { mean: self.mean * k, stderr: self.stderr * k, lo: mul(self.lo), hi: mul(self.hi) }
    }
}

/// The CI separation rule.
pub fn verdict(lhs: &Side, rhs: &Side) -> Verdict {
    if lhs.hi <= rhs.lo {
        Verdict::Holds
    } else if lhs.lo > rhs.hi {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Constants entering a statement, with where they came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatementConstants {
    pub k: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    /// Fitted or assumed multiplicative constant (`C`, `C₁`).
    pub c: Option<f64>,
    pub provenance: String,
}

impl StatementConstants {
    /// `(K, κ, δ) = (K₁, κ₁, δ₁)` measured for the Itô–Tanaka transform.
    pub fn from_harnack(h: &HarnackConstants) -> Self {
        StatementConstants {
            k: Some(h.k1),
            kappa: Some(h.kappa1),
            delta: Some(h.delta1),
            c: None,
            provenance: alloc::format!(
                "K = K1, kappa = kappa1, delta = delta1 from norms measured on {} (lambda = {})",
                h.inputs.measured_on, h.lambda
            ),
        }
    }

    pub fn lipschitz(k: f64, kappa: f64, delta: f64, provenance: &str) -> Self {
        StatementConstants { k: Some(k), kappa: Some(kappa), delta: Some(delta), c: None, provenance: provenance.into() }
    }

    /// A multiplicative constant together with the ellipticity lower bound `δ`.
    pub fn fitted(c: f64, delta: f64, provenance: &str) -> Self {
        StatementConstants { k: None, kappa: None, delta: Some(delta), c: Some(c), provenance: provenance.into() }
    }

    fn need(&self, v: Option<f64>, name: &str, id: StatementId) -> Result<f64> {
        v.ok_or_else(|| Error::Configuration(alloc::format!("{} needs the constant {name}", id.as_str())))
    }
}

/// `(1 − e^{−Kt})/K`, equal to `t` at `K = 0`.
fn decay(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        t
    } else {
        -expm1(-k * t) / k
    }
}

/// `(1 + δ/κ)²`; admissible exponents are strictly larger.
pub fn power_threshold(delta: f64, kappa: f64) -> f64 {
    sq(1.0 + delta / kappa)
}

/// `δ_p = max{δ, κ(√p − 1)/2}`.
pub fn delta_p(delta: f64, kappa: f64, p: f64) -> f64 {
    delta.max(0.5 * kappa * (sqrt(p) - 1.0))
}

/// The additive term (log statements) or the exponent (power statements).
pub fn harnack_term(
    id: StatementId,
    consts: &StatementConstants,
    p: Option<f64>,
    x: &[f64],
    y: &[f64],
    s: f64,
    t: f64,
) -> Result<f64> {
    let d2 = sq(linalg::distance(x, y));
    if d2 == 0.0 && !id.is_power() {
        return Ok(0.0);
    }
    let span = t - s;
    if !(span > 0.0) {
        return arg_err("need s < t");
    }
    match id {
        StatementId::LogFitted => {
            let c = consts.need(consts.c, "C", id)?;
            let delta = consts.need(consts.delta, "delta", id)?;
            Ok(c * d2 / (delta * span))
        }
        StatementId::LogShortTime => {
            let c = consts.need(consts.c, "C1", id)?;
            let delta = consts.need(consts.delta, "delta", id)?;
            Ok(c * d2 / (2.0 * delta * span))
        }
        StatementId::LogExplicit | StatementId::LogMonotone => {
            let k = consts.need(consts.k, "K", id)?;
            let kappa = consts.need(consts.kappa, "kappa", id)?;
            let g = decay(k, span);
            Ok(if id == StatementId::LogExplicit {
                2.0 * d2 / (sq(kappa) * g)
            } else {
                d2 / (2.0 * sq(kappa) * g)
            })
        }
        StatementId::PowerExplicit | StatementId::PowerMonotone => {
            let k = consts.need(consts.k, "K", id)?;
            let kappa = consts.need(consts.kappa, "kappa", id)?;
            let delta = consts.need(consts.delta, "delta", id)?;
            let p = p.ok_or_else(|| Error::Configuration(alloc::format!("{} needs p", id.as_str())))?;
            let threshold = power_threshold(delta, kappa);
            if !(p > threshold) {
                return arg_err(alloc::format!("p = {p} is not above the admissibility threshold (1 + δ/κ)² = {threshold}"));
            }
            if d2 == 0.0 {
                return Ok(0.0);
            }
            let sp = sqrt(p);
            let dp = delta_p(delta, kappa, p);
            let four = if id == StatementId::PowerMonotone { 4.0 } else { 1.0 };
            Ok(sp * (sp - 1.0) * d2 / (four * dp * ((sp - 1.0) * kappa - dp) * decay(k, span)))
        }
        StatementId::Stable => arg_err("the stable statement has a multiplicative form; use verify_stable_harnack"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub statement: StatementId,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub f: String,
    pub p: Option<f64>,
    pub lhs: Side,
    pub rhs: Side,
    /// Additive term, exponent, or multiplicative factor, depending on the statement.
    pub term: f64,
    pub constants: StatementConstants,
    pub verdict: Verdict,
    pub n_paths: usize,
    pub seed: u64,
}

fn check_points(problem: &SdeProblem, f: &TestFunction, x: &[f64], y: &[f64]) -> Result<()> {
    let d = problem.dim();
    if x.len() != d || y.len() != d || f.dim() != d {
        return arg_err("points, test function and problem dimensions differ");
    }
    Ok(())
}

/// `T_{s,t} log f(y)` against `log T_{s,t} f(x)` plus the statement's additive term.
#[allow(clippy::too_many_arguments)]
pub fn verify_log_harnack(
    id: StatementId,
    problem: &SdeProblem,
    consts: &StatementConstants,
    x: &[f64],
    y: &[f64],
    s: f64,
    t: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<HarnackReport> {
    if !id.is_log() {
        return arg_err(alloc::format!("{} is not a log statement", id.as_str()));
    }
    check_points(problem, f, x, y)?;
    let term = harnack_term(id, consts, None, x, y, s, t)?;
    let lhs = estimate_functional(problem, Functional::Log, f, s, t, y, cfg)?.estimate;
    let plain = estimate_functional(problem, Functional::Plain, f, s, t, x, cfg)?.estimate;
    let lhs = Side::from_estimate(&lhs);
    let rhs = Side::log_of(&plain).shifted(term);
    Ok(HarnackReport {
        statement: id,
        x: x.to_vec(),
        y: y.to_vec(),
        s,
        t,
        f: f.name().into(),
        p: None,
        verdict: verdict(&lhs, &rhs),
        lhs,
        rhs,
        term,
        constants: consts.clone(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    })
}

/// `(P_t f(y))^p` against `P_t f^p(x)·exp(exponent)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_power_harnack(
    id: StatementId,
    problem: &SdeProblem,
    consts: &StatementConstants,
    p: f64,
    x: &[f64],
    y: &[f64],
    t: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<HarnackReport> {
    if !id.is_power() {
        return arg_err(alloc::format!("{} is not a power statement", id.as_str()));
    }
    check_points(problem, f, x, y)?;
    let term = harnack_term(id, consts, Some(p), x, y, 0.0, t)?;
    let base = estimate_functional(problem, Functional::Plain, f, 0.0, t, y, cfg)?.estimate;
    let power = estimate_functional(problem, Functional::Power { p }, f, 0.0, t, x, cfg)?.estimate;
    let m = base.mean.max(0.0);
    let se = p * pow(m, p - 1.0) * base.stderr;
    let mp = pow(m, p);
    let lhs = Side { mean: mp, stderr: se, lo: (mp - base.z * se).max(0.0), hi: mp + base.z * se };
    let mut rhs = Side::from_estimate(&power);
    rhs.lo = rhs.lo.max(0.0);
    let rhs = rhs.scaled_exp(term);
    Ok(HarnackReport {
        statement: id,
        x: x.to_vec(),
        y: y.to_vec(),
        s: 0.0,
        t,
        f: f.name().into(),
        p: Some(p),
        verdict: verdict(&lhs, &rhs),
        lhs,
        rhs,
        term,
        constants: consts.clone(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    })
}

/// One `(x, y, s, t, f)` instance of a log sweep.
#[derive(Clone, Debug)]
pub struct SweepInstance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub f: TestFunction,
}

/// Seed of an instance, derived from its content so that adding instances to a sweep does
/// not change the estimates of the others.
pub fn instance_seed(seed: u64, inst: &SweepInstance) -> u64 {
    let mut h = seed;
    for v in inst.x.iter().chain(&inst.y).chain([&inst.s, &inst.t]) {
        h = derive_seed(h, v.to_bits());
    }
    for b in inst.f.name().bytes() {
        h = derive_seed(h, b as u64);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub f: String,
    pub seed: u64,
    /// Upper confidence bound of `T_{s,t} log f(y)`.
    pub lhs_upper: f64,
    /// Lower confidence bound of `log T_{s,t} f(x)`.
    pub rhs_lower: f64,
    /// Smallest constant making this instance hold.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub statement: StatementId,
    pub c_emp: f64,
    pub n_paths: usize,
    pub instances: Vec<InstanceFit>,
    /// Refit with `2N` paths, when requested.
    pub c_emp_doubled: Option<f64>,
    /// `|c(2N) − c(N)| < 0.1·c(N)`.
    pub stable: Option<bool>,
}

/// Minimum number of instances in a sweep.
pub const MIN_SWEEP: usize = 20;

fn fit_once(
    id: StatementId,
    problem: &SdeProblem,
    delta: f64,
    sweep: &[SweepInstance],
    cfg: &McConfig,
) -> Result<(f64, Vec<InstanceFit>)> {
    let factor = if id == StatementId::LogShortTime { 2.0 } else { 1.0 };
    let mut fits = Vec::with_capacity(sweep.len());
    for inst in sweep {
        let seed = instance_seed(cfg.seed, inst);
        let c = cfg.clone().with_seed(seed);
        let lhs = estimate_functional(problem, Functional::Log, &inst.f, inst.s, inst.t, &inst.y, &c)?.estimate;
        let plain = estimate_functional(problem, Functional::Plain, &inst.f, inst.s, inst.t, &inst.x, &c)?.estimate;
        let lhs_upper = Side::from_estimate(&lhs).hi;
        let rhs_lower = Side::log_of(&plain).lo;
        let d2 = sq(linalg::distance(&inst.x, &inst.y));
        let constant = (lhs_upper - rhs_lower) * factor * delta * (inst.t - inst.s) / d2;
        fits.push(InstanceFit {
            x: inst.x.clone(),
            y: inst.y.clone(),
            s: inst.s,
            t: inst.t,
            f: inst.f.name().into(),
            seed,
            lhs_upper,
            rhs_lower,
            constant,
        });
    }
    let c = fits.iter().map(|f| f.constant).fold(f64::NEG_INFINITY, f64::max);
    // a few ulps of headroom so that substituting the constant reproduces HOLDS exactly
    Ok((c + 8.0 * f64::EPSILON * c.abs(), fits))
}

/// The smallest `C` for which every swept instance is `Holds` under the CI rule.
pub fn fit_empirical_constant(
    id: StatementId,
    problem: &SdeProblem,
    delta: f64,
    sweep: &[SweepInstance],
    cfg: &McConfig,
    check_stability: bool,
) -> Result<EmpiricalConstant> {
    if !matches!(id, StatementId::LogFitted | StatementId::LogShortTime) {
        return arg_err(alloc::format!("no fitted constant for {}", id.as_str()));
    }
    if sweep.len() < MIN_SWEEP {
        return arg_err(alloc::format!("a sweep needs at least {MIN_SWEEP} instances, got {}", sweep.len()));
    }
    if !(delta > 0.0) {
        return arg_err("delta must be positive");
    }
    for inst in sweep {
        if inst.x == inst.y {
            return arg_err("sweep instances need x ≠ y");
        }
        if !(inst.t > inst.s) {
            return arg_err("sweep instances need s < t");
        }
    }
    let (c_emp, instances) = fit_once(id, problem, delta, sweep, cfg)?;
    let (c_emp_doubled, stable) = if check_stability {
        let doubled = cfg.clone().with_paths(2 * cfg.n_paths).with_seed(derive_seed(cfg.seed, 2));
        let (c2, _) = fit_once(id, problem, delta, sweep, &doubled)?;
        (Some(c2), Some((c2 - c_emp).abs() < 0.1 * c_emp.abs()))
    } else {
        (None, None)
    };
    Ok(EmpiricalConstant { statement: id, c_emp, n_paths: cfg.n_paths, instances, c_emp_doubled, stable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn side(lo: f64, hi: f64) -> Side {
        Side { mean: 0.5 * (lo + hi), stderr: 0.0, lo, hi }
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(verdict(&side(0.0, 1.0), &side(1.0, 2.0)), Verdict::Holds);
        assert_eq!(verdict(&side(2.1, 3.0), &side(1.0, 2.0)), Verdict::Violated);
        assert_eq!(verdict(&side(0.0, 1.5), &side(1.0, 2.0)), Verdict::Inconclusive);
    }

    #[test]
    fn power_exponent_simplifies_when_delta_vanishes() {
        let c = StatementConstants::lipschitz(1.0, 1.0, 0.0, "test");
        let (x, y, t, p) = ([0.0], [1.5], 0.7, 4.0);
        let e = harnack_term(StatementId::PowerMonotone, &c, Some(p), &x, &y, 0.0, t).unwrap();
        let k = 1.0;
        let expect = k * sqrt(p) * 2.25 / ((sqrt(p) - 1.0) * (1.0 - exp(-k * t)));
        assert!((e - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn threshold_is_strict() {
        let c = StatementConstants::lipschitz(1.0, 0.5, 3.0, "test");
        let p = power_threshold(3.0, 0.5);
        assert_eq!(p, 49.0);
        assert!(harnack_term(StatementId::PowerExplicit, &c, Some(p), &[0.0], &[1.0], 0.0, 1.0).is_err());
        assert!(harnack_term(StatementId::PowerExplicit, &c, Some(50.0), &[0.0], &[1.0], 0.0, 1.0).is_ok());
    }

    #[test]
    fn zero_k_limit() {
        let c = StatementConstants::lipschitz(0.0, 1.0, 0.0, "test");
        let a = harnack_term(StatementId::LogMonotone, &c, None, &[0.0], &[1.0], 0.0, 2.0).unwrap();
        assert!((a - 0.25).abs() < 1e-15);
        let c2 = StatementConstants::lipschitz(1e-9, 1.0, 0.0, "test");
        let b = harnack_term(StatementId::LogMonotone, &c2, None, &[0.0], &[1.0], 0.0, 2.0).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn fitted_statement_needs_constant() {
        let c = StatementConstants::default();
        let r = harnack_term(StatementId::LogFitted, &c, None, &[0.0], &[1.0], 0.0, 1.0);
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn same_point_and_constant_function_hold() {
        let p = SdeProblem::heat(1, 1.0);
        let c = StatementConstants::lipschitz(0.0, 1.0, 0.0, "heat");
        let cfg = McConfig::new(20_000, 4).step(1.0);
        let one = TestFunction::constant(1, 1.0);
        let r = verify_log_harnack(StatementId::LogMonotone, &p, &c, &[0.0], &[1.0], 0.0, 1.0, &one, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let f = TestFunction::exp_tilt(&[2.0]);
        let r = verify_log_harnack(StatementId::LogMonotone, &p, &c, &[0.5], &[0.5], 0.0, 1.0, &f, &cfg).unwrap();
        assert_eq!(r.term, 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn heat_extremal_exponential_holds_with_small_margin() {
        let p = SdeProblem::heat(1, 1.0);
        let c = StatementConstants::lipschitz(0.0, 1.0, 0.0, "heat");
        let (x, y, t) = (0.0, 1.0, 1.0);
        let f = TestFunction::exp_tilt(&[(y - x) / t]);
        let cfg = McConfig::new(100_000, 11).step(t);
        let r = verify_log_harnack(StatementId::LogMonotone, &p, &c, &[x], &[y], 0.0, t, &f, &cfg).unwrap();
        assert_eq!(r.term, 0.5);
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        // Gauss–Hermite value of the gap is 0.0672
        assert!((r.rhs.mean - r.lhs.mean - 0.0672).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn fit_needs_enough_distinct_instances() {
        let p = SdeProblem::heat(1, 1.0);
        let inst = SweepInstance { x: vec![0.0], y: vec![1.0], s: 0.0, t: 1.0, f: TestFunction::exp_tilt(&[1.0]) };
        let few = vec![inst.clone(); 5];
        assert!(fit_empirical_constant(StatementId::LogFitted, &p, 1.0, &few, &McConfig::new(10, 1), false).is_err());
        let mut same = vec![inst; 20];
        same[3].y = vec![0.0];
        assert!(fit_empirical_constant(StatementId::LogFitted, &p, 1.0, &same, &McConfig::new(10, 1), false).is_err());
    }
}
