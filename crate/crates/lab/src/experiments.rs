//! One function per experiment kind. Each returns a JSON result and, for Harnack
//! experiments, the verdict rows that go into the CSV table.

use harnack_core::fields::{
    check_nondegeneracy, direction_probes, ellipticity_at, CoefficientField, PointPair, DEFAULT_VIOLATION_TOL,
};
use harnack_core::harnack::{
    fit_empirical_constant, harnack_constant_from_kernel, instance_seed, power_threshold, verify_interpolation_identity,
    verify_kernel_bounds, verify_log_harnack, verify_power_harnack, verify_stable_harnack, HarnackReport,
    InterpolationConfig, StatementConstants, StatementId, SweepInstance,
};
use harnack_core::pde::SpaceTimeGrid;
use harnack_core::presets::{build_diffusion, build_drift, build_test_function};
use harnack_core::rng::derive_seed;
use harnack_core::sde::{simulate_coupled_pair, CouplingSpec, Driver, EnsembleSpec, SdeProblem};
use harnack_core::semigroup::{
    estimate_gradient_ratio, mollification_convergence, mollified_gradient_ratios, McConfig, TestFunction, DEFAULT_PATHS,
};
use harnack_core::transforms::{
    bilipschitz_check, build_ito_tanaka, build_zvonkin, jacobian_singular_range, pushforward_consistency,
    verify_a1_a2_a3, ItoTanakaTransform, TransformMap, DEFAULT_LAMBDA_SCHEDULE,
};
use harnack_core::Error;
use serde_json::{json, Value};

use crate::config::{ExperimentKind, PresetRef, Scenario, TransformKind};

pub struct Outcome {
    pub result: Value,
    pub rows: Vec<HarnackReport>,
}

type Res<T> = Result<T, Error>;

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn config_err<T>(msg: impl Into<String>) -> Res<T> {
    Err(Error::Configuration(msg.into()))
}

pub fn build_problem(sc: &Scenario) -> Res<SdeProblem> {
    let b = build_drift(&sc.drift.preset, sc.dim, &sc.drift.params())?;
    match sc.alpha {
        Some(alpha) => SdeProblem::stable(b, alpha, sc.horizon),
        None => {
            let sigma = build_diffusion(&sc.diffusion.preset, sc.dim, &sc.diffusion.params())?;
            SdeProblem::brownian(b, sigma, sc.horizon)
        }
    }
}

pub fn mc_config(sc: &Scenario) -> McConfig {
    let cfg = McConfig::new(sc.n_paths.unwrap_or(DEFAULT_PATHS), sc.seed);
    match sc.dt {
        Some(dt) => cfg.step(dt),
        None => cfg,
    }
}

fn space_time_grid(sc: &Scenario) -> Res<SpaceTimeGrid> {
    let g = sc.grid.clone().unwrap_or_default();
    SpaceTimeGrid::new(sc.dim, g.m, g.half_width, 0.0, sc.horizon, g.steps)
}

fn function(r: &PresetRef, dim: usize) -> Res<TestFunction> {
    build_test_function(&r.preset, dim, &r.params())
}

fn origin(sc: &Scenario) -> Vec<f64> {
    vec![0.0; sc.dim]
}

fn points_or_origin(sc: &Scenario) -> Vec<Vec<f64>> {
    if sc.points.is_empty() {
        vec![origin(sc)]
    } else {
        sc.points.clone()
    }
}

/// Deterministic probe pairs inside the grid box from additive recurrences.
fn probe_pairs(dim: usize, n: usize, half_width: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let irr = [0.618_033_988_749_895, 0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79, 0.645_751_311_064_59, 0.316_624_790_355_4];
    let reach = 0.9 * half_width;
    let coord = |k: usize, j: usize| {
        let u = ((k + 1) as f64 * irr[j]).fract();
        reach * (2.0 * u - 1.0)
    };
    (0..n)
        .map(|k| {
            let x: Vec<f64> = (0..dim).map(|j| coord(k, j)).collect();
            let mut y: Vec<f64> = (0..dim).map(|j| coord(k, j + 3)).collect();
            if k % 2 == 0 {
                // half of the pairs are close
                for (yj, xj) in y.iter_mut().zip(&x) {
                    *yj = xj + 1e-3 * (*yj / reach);
                }
            }
            if x == y {
                y[0] += 1e-4;
            }
            (x, y)
        })
        .collect()
}

/// `constants.delta`, or the smallest eigenvalue of `σσ*` at the origin.
pub fn fitted_delta(sc: &Scenario, problem: &SdeProblem) -> Res<f64> {
    match sc.constants.as_ref().and_then(|c| c.delta) {
        Some(d) => Ok(d),
        None => Ok(ellipticity_at(problem.diffusion(), 0.0, &origin(sc))?.0),
    }
}

pub fn run(sc: &Scenario) -> Res<Outcome> {
    let plain = |result| Ok(Outcome { result, rows: Vec::new() });
    match sc.experiment {
        ExperimentKind::ConditionCheck => plain(condition_check(sc)?),
        ExperimentKind::TransformBuild => plain(transform_build(sc)?),
        ExperimentKind::HarnackVerify => harnack_verify(sc),
        ExperimentKind::KernelBounds => plain(kernel_bounds(sc)?),
        ExperimentKind::Coupling => plain(coupling(sc)?),
        ExperimentKind::GradientEstimate => plain(gradient_estimate(sc)?),
        ExperimentKind::InterpolationIdentity => plain(interpolation(sc)?),
        ExperimentKind::Mollification => plain(mollification(sc)?),
    }
}

fn condition_check(sc: &Scenario) -> Res<Value> {
    let sigma = build_diffusion(&sc.diffusion.preset, sc.dim, &sc.diffusion.params())?;
    let resolution = sc.resolution.unwrap_or(1e-3);
    let t = sc.times.first().copied().unwrap_or(0.0);
    let mut out = Vec::new();
    for x in points_or_origin(sc) {
        let w = check_nondegeneracy(&sigma, &direction_probes(sc.dim, t, &x, resolution), DEFAULT_VIOLATION_TOL)?;
        let (lo, hi) = ellipticity_at(&sigma, t, &x)?;
        out.push(json!({
            "t": t,
            "x": x,
            "probes": w.probes.len(),
            "delta": w.delta,
            "kappa_upper": w.kappa_upper,
            "violated": w.violated,
            "argmin_direction": w.argmin_probe().y,
            "surrogate_delta": w.surrogate_delta,
            "surrogate_upper": w.surrogate_upper,
            "surrogate_violated": w.surrogate_violated,
            "eigenvalue_range": [lo, hi],
        }));
    }
    Ok(json!({ "resolution": resolution, "points": out }))
}

fn map_checks(sc: &Scenario, map: &TransformMap, t: f64) -> Res<Value> {
    let half_width = sc.grid.clone().unwrap_or_default().half_width;
    let pairs = probe_pairs(sc.dim, sc.probe_pairs.unwrap_or(1000), half_width);
    let check = bilipschitz_check(map, t, &pairs)?;
    let points: Vec<Vec<f64>> = pairs.iter().map(|(x, _)| x.clone()).collect();
    let (lo, hi) = jacobian_singular_range(map, t, &points);
    Ok(json!({ "t": t, "bilipschitz": to_json(&check), "jacobian_singular_range": [lo, hi] }))
}

pub fn ito_tanaka(sc: &Scenario, problem: &SdeProblem) -> Res<ItoTanakaTransform> {
    let schedule = sc.lambda_schedule.clone().unwrap_or_else(|| DEFAULT_LAMBDA_SCHEDULE.to_vec());
    build_ito_tanaka(problem.diffusion(), problem.drift(), &space_time_grid(sc)?, &schedule)
}

fn transform_build(sc: &Scenario) -> Res<Value> {
    let problem = build_problem(sc)?;
    if problem.driver() != Driver::Brownian {
        return config_err("transforms need Brownian noise");
    }
    match sc.transform {
        TransformKind::Zvonkin => {
            let z = build_zvonkin(problem.diffusion(), problem.drift(), &space_time_grid(sc)?)?;
            let checks = map_checks(sc, &z.map, 0.5 * z.t0())?;
            Ok(json!({
                "transform": "zvonkin",
                "t0": z.t0(),
                "summary": to_json(&z.summary),
                "pde": to_json(&z.report),
                "grad_bound": z.map.grad_bound(),
                "checks": checks,
            }))
        }
        TransformKind::ItoTanaka => {
            let it = ito_tanaka(sc, &problem)?;
            let checks = map_checks(sc, &it.map, 0.0)?;
            let sigma_hat = it.transformed_diffusion();
            let b_hat = it.transformed_drift();
            let half_width = sc.grid.clone().unwrap_or_default().half_width;
            let probes: Vec<PointPair> = probe_pairs(sc.dim, 200, 0.5 * half_width)
                .into_iter()
                .enumerate()
                .map(|(k, (x, y))| PointPair { t: it.horizon() * (k % 5) as f64 / 4.0, x, y })
                .collect();
            let points: Vec<(f64, Vec<f64>)> = probes.iter().map(|p| (p.t, p.x.clone())).collect();
            let certificate = verify_a1_a2_a3(&sigma_hat, &b_hat, &probes, &points, Some(&it.constants))?;
            let pushforward = match sc.pushforward_t {
                Some(t) => {
                    let conj = it.conjugate_problem(sc.horizon)?;
                    let mut spec = EnsembleSpec::new(sc.n_paths.unwrap_or(DEFAULT_PATHS), derive_seed(sc.seed, 0x5F));
                    spec.dt = sc.dt;
                    let x0 = points_or_origin(sc).remove(0);
                    to_json(&pushforward_consistency(&problem, &it.map, &conj, &x0, t, &spec)?)
                }
                None => Value::Null,
            };
            Ok(json!({
                "transform": "ito-tanaka",
                "lambda": it.lambda,
                "attempts": to_json(&it.attempts),
                "constants": to_json(&it.constants),
                "pde": to_json(&it.report),
                "grad_bound": it.map.grad_bound(),
                "checks": checks,
                "certificate": to_json(&certificate),
                "pushforward": pushforward,
            }))
        }
    }
}

/// Every instance paired with its test functions.
pub fn cases(sc: &Scenario) -> Res<Vec<SweepInstance>> {
    let mut out = Vec::new();
    for inst in &sc.instances {
        let fs: Vec<&PresetRef> = match &inst.f {
            Some(f) => vec![f],
            None => sc.functions.iter().collect(),
        };
        if fs.is_empty() {
            return config_err("instances need a test function (per instance `f` or scenario `function` tables)");
        }
        for f in fs {
            out.push(SweepInstance { x: inst.x.clone(), y: inst.y.clone(), s: inst.s, t: inst.t, f: function(f, sc.dim)? });
        }
    }
    if out.is_empty() {
        return config_err("harnack-verify needs at least one `instance`");
    }
    Ok(out)
}

fn harnack_verify(sc: &Scenario) -> Res<Outcome> {
    let problem = build_problem(sc)?;
    let cfg = mc_config(sc);
    let cases = cases(sc)?;
    let given = sc.constants.clone().unwrap_or_default();
    let ids: Vec<StatementId> = sc
        .statements
        .iter()
        .map(|s| StatementId::parse(s).ok_or_else(|| Error::Configuration(format!("unknown statement `{s}`"))))
        .collect::<Res<_>>()?;
    if ids.is_empty() {
        return config_err("harnack-verify needs `statements`");
    }
    let mut rows = Vec::new();
    let mut extra = serde_json::Map::new();

    let needs_lipschitz = ids.iter().any(|id| id.is_explicit() || matches!(id, StatementId::LogMonotone | StatementId::PowerMonotone));
    let mut derived: Option<(StatementConstants, SdeProblem)> = None;
    if needs_lipschitz {
        if let (Some(k), Some(kappa), Some(delta)) = (given.k, given.kappa, given.delta) {
            derived = Some((StatementConstants::lipschitz(k, kappa, delta, "given"), problem.clone()));
        } else {
            let it = ito_tanaka(sc, &problem)?;
            extra.insert("ito_tanaka".into(), json!({ "lambda": it.lambda, "constants": to_json(&it.constants) }));
            derived = Some((StatementConstants::from_harnack(&it.constants), it.conjugate_problem(sc.horizon)?));
        }
    }

    for id in ids {
        match id {
            StatementId::LogFitted | StatementId::LogShortTime => {
                let delta = fitted_delta(sc, &problem)?;
                let c = match (given.c, sc.fit) {
                    (_, true) => {
                        let sweep: Vec<SweepInstance> =
                            cases.iter().filter(|i| i.x != i.y).cloned().collect();
                        let fit = fit_empirical_constant(id, &problem, delta, &sweep, &cfg, sc.stability)?;
                        let c = fit.c_emp;
                        extra.insert(format!("fit:{}", id.as_str()), to_json(&fit));
                        c
                    }
                    (Some(c), false) => c,
                    (None, false) => return config_err(format!("{} needs `constants.c` or `fit = true`", id.as_str())),
                };
                let consts = StatementConstants::fitted(c, delta, if sc.fit { "fitted" } else { "given" });
                for i in &cases {
                    let c_i = cfg.clone().with_seed(instance_seed(cfg.seed, i));
                    rows.push(verify_log_harnack(id, &problem, &consts, &i.x, &i.y, i.s, i.t, &i.f, &c_i)?);
                }
            }
            StatementId::LogExplicit | StatementId::LogMonotone => {
                let (consts, conj) = derived.as_ref().expect("constants derived above");
                let target = if id == StatementId::LogMonotone { conj } else { &problem };
                for i in &cases {
                    let c_i = cfg.clone().with_seed(instance_seed(cfg.seed, i));
                    rows.push(verify_log_harnack(id, target, consts, &i.x, &i.y, i.s, i.t, &i.f, &c_i)?);
                }
            }
            StatementId::PowerExplicit | StatementId::PowerMonotone => {
                let (consts, conj) = derived.as_ref().expect("constants derived above");
                let target = if id == StatementId::PowerMonotone { conj } else { &problem };
                let ps = if sc.p.is_empty() {
                    let p1 = power_threshold(consts.delta.unwrap_or(0.0), consts.kappa.unwrap_or(1.0)).ceil() + 1.0;
                    vec![p1, 2.0 * p1]
                } else {
                    sc.p.clone()
                };
                for i in &cases {
                    if i.s != 0.0 {
                        return config_err("power statements are checked from s = 0");
                    }
                    let c_i = cfg.clone().with_seed(instance_seed(cfg.seed, i));
                    for &p in &ps {
                        rows.push(verify_power_harnack(id, target, consts, p, &i.x, &i.y, i.t, &i.f, &c_i)?);
                    }
                }
            }
            StatementId::Stable => {
                let Driver::Stable { alpha } = problem.driver() else {
                    return config_err("the stable statement needs `alpha`");
                };
                let c = match given.c {
                    Some(c) => c,
                    None => {
                        let kb = kernel_bounds_report(sc, &problem)?;
                        let c = harnack_constant_from_kernel(kb.c_fit, alpha, sc.dim);
                        extra.insert("kernel_bounds".into(), to_json(&kb));
                        c
                    }
                };
                for (k, i) in cases.iter().enumerate() {
                    let c_i = cfg.clone().with_seed(derive_seed(cfg.seed, k as u64));
                    rows.push(verify_stable_harnack(&problem, &i.f, i.t, &i.x, &i.y, c, &c_i)?);
                }
            }
        }
    }
    extra.insert("instances".into(), json!(rows.len()));
    Ok(Outcome { result: Value::Object(extra), rows })
}

fn kernel_bounds_report(sc: &Scenario, problem: &SdeProblem) -> Res<harnack_core::harnack::KernelBoundsReport> {
    let t = sc.times.first().copied().unwrap_or(sc.horizon.min(1.0));
    let starts = if sc.starts.is_empty() { vec![-1.0, 0.0, 1.0] } else { sc.starts.clone() };
    let offsets = if sc.offsets.is_empty() { (-16..=16).map(|k| 0.5 * k as f64).collect() } else { sc.offsets.clone() };
    let cfg = mc_config(sc);
    let cfg = if sc.dt.is_none() { cfg.step(t) } else { cfg };
    verify_kernel_bounds(problem, t, &starts, &offsets, &cfg, sc.stability)
}

fn kernel_bounds(sc: &Scenario) -> Res<Value> {
    let problem = build_problem(sc)?;
    let kb = kernel_bounds_report(sc, &problem)?;
    let alpha = match problem.driver() {
        Driver::Stable { alpha } => alpha,
        Driver::Brownian => 2.0,
    };
    Ok(json!({ "report": to_json(&kb), "harnack_constant": harnack_constant_from_kernel(kb.c_fit, alpha, sc.dim) }))
}

fn coupling(sc: &Scenario) -> Res<Value> {
    let problem = build_problem(sc)?;
    let x = points_or_origin(sc).remove(0);
    let y = match &sc.y {
        Some(y) => y.clone(),
        None => {
            let mut y = x.clone();
            y[0] += 1.0;
            y
        }
    };
    let spec = CouplingSpec { k: sc.k.unwrap_or(0.0), n_pairs: sc.n_paths.unwrap_or(10_000), dt: sc.dt, seed: sc.seed };
    let s = simulate_coupled_pair(&problem, &x, &y, &spec)?;
    let coupled: Vec<f64> = s.tau.iter().flatten().copied().collect();
    let mean_tau = if coupled.is_empty() { f64::NAN } else { coupled.iter().sum::<f64>() / coupled.len() as f64 };
    Ok(json!({
        "x": x,
        "y": y,
        "k": spec.k,
        "horizon": s.horizon,
        "epsilon": s.epsilon,
        "pairs": s.tau.len(),
        "success_fraction": s.success_fraction,
        "mean_coupling_time": mean_tau,
        "density": to_json(&s.density),
        "density_within_3se": s.density.within(1.0, 3.0),
        "semi_lipschitz_violations": s.semi_lipschitz_violations,
        "pairs_checked": s.pairs_checked,
        "warning": s.warning,
    }))
}

fn default_function(sc: &Scenario) -> Res<TestFunction> {
    match sc.functions.first() {
        Some(f) => function(f, sc.dim),
        None => Ok(TestFunction::sin(sc.dim, 0)),
    }
}

fn gradient_estimate(sc: &Scenario) -> Res<Value> {
    let problem = build_problem(sc)?;
    let f = default_function(sc)?;
    let times = if sc.times.is_empty() { vec![sc.horizon] } else { sc.times.clone() };
    let mut ratios = Vec::new();
    let mut k = 0u64;
    for &t in &times {
        for x in points_or_origin(sc) {
            let cfg = mc_config(sc).with_seed(derive_seed(sc.seed, k));
            k += 1;
            ratios.push(to_json(&estimate_gradient_ratio(&problem, &f, t, &x, &cfg)?));
        }
    }
    let mollified = if sc.mollify.is_empty() {
        Value::Null
    } else {
        let x = points_or_origin(sc).remove(0);
        let t = times[times.len() - 1];
        let family = mollified_gradient_ratios(problem.drift(), problem.diffusion(), &sc.mollify, &f, t, &x, &mc_config(sc))?;
        Value::Array(family.iter().map(|(n, g)| json!({ "n": n, "ratio": g.ratio, "ratio_stderr": g.ratio_stderr })).collect())
    };
    Ok(json!({ "ratios": ratios, "mollified": mollified }))
}

fn interpolation(sc: &Scenario) -> Res<Value> {
    let problem = build_problem(sc)?;
    let f = default_function(sc)?;
    let d = InterpolationConfig::default();
    let cfg = InterpolationConfig {
        n_outer: sc.n_outer.unwrap_or(d.n_outer),
        n_inner: sc.n_inner.unwrap_or(d.n_inner),
        nodes: sc.nodes.unwrap_or(d.nodes),
        grid_points: sc.grid_points.unwrap_or(d.grid_points),
        inner_replicates: sc.replicates.unwrap_or(d.inner_replicates),
        seed: sc.seed,
        dt: sc.dt,
    };
    let x = points_or_origin(sc).remove(0);
    let t = sc.times.first().copied().unwrap_or(sc.horizon);
    let s = sc.s.unwrap_or(0.0);
    let u = sc.u.unwrap_or(0.5 * (s + t));
    Ok(to_json(&verify_interpolation_identity(&problem, &f, s, u, t, x[0], &cfg)?))
}

fn mollification(sc: &Scenario) -> Res<Value> {
    let sigma: CoefficientField = build_diffusion(&sc.diffusion.preset, sc.dim, &sc.diffusion.params())?;
    let schedule = if sc.mollify.is_empty() { vec![1, 2, 4, 8, 16] } else { sc.mollify.clone() };
    let x = points_or_origin(sc).remove(0);
    let t = sc.times.first().copied().unwrap_or(sc.horizon);
    Ok(to_json(&mollification_convergence(&sigma, &x, t, &schedule, &mc_config(sc))?))
}
