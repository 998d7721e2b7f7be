//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and then asserts.

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use harnack_core::fields::{check_nondegeneracy, direction_probes, CoefficientField, DEFAULT_VIOLATION_TOL};
use harnack_core::harnack::{
    fit_empirical_constant, harnack_constant_from_kernel, power_threshold, verify_interpolation_identity,
    verify_kernel_bounds, verify_log_harnack, verify_power_harnack, verify_stable_harnack, InterpolationConfig,
    StatementConstants, StatementId, SweepInstance, Verdict,
};
use harnack_core::pde::SpaceTimeGrid;
use harnack_core::presets::{build_diffusion, build_drift, Params};
use harnack_core::rng::derive_seed;
use harnack_core::sde::coupling::{simulate_coupled_pair, CouplingSpec};
use harnack_core::sde::{EnsembleSpec, SdeProblem};
use harnack_core::semigroup::{estimate_gradient_ratio, mollified_gradient_ratios, McConfig, TestFunction};
use harnack_core::transforms::{
    bilipschitz_check, build_ito_tanaka, build_zvonkin, pushforward_consistency, DEFAULT_LAMBDA_SCHEDULE,
};
use rand::{Rng, SeedableRng};

// Runtime budgets are per criterion, so the criteria run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: usize, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let ok = pass && elapsed <= budget;
    println!(
        "acceptance {id:>2} [{}] {name}: {detail} ({:.1} s, budget {} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(elapsed <= budget, "criterion {id} exceeded its runtime budget");
}

fn params(pairs: &[(&str, &[f64])]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

#[test]
fn c01_footnote_matrix_counterexample() {
    let _guard = serial();
    let start = Instant::now();
    let sigma = build_diffusion("footnote-matrix", 2, &Params::new()).unwrap();
    let probes = direction_probes(2, 0.0, &[0.0, 0.0], 1e-3);
    let w = check_nondegeneracy(&sigma, &probes, DEFAULT_VIOLATION_TOL).unwrap();
    let pass = w.violated && !w.surrogate_violated && w.surrogate_delta > 0.0;
    let detail = format!(
        "min |sigma* y|^2 = {:.2e} at y = {:?}, surrogate delta = {}",
        w.delta,
        w.argmin_probe().y,
        w.surrogate_delta
    );
    report(1, "footnote counterexample", pass, &detail, start.elapsed(), Duration::from_secs(1));
}

#[test]
fn c02_gaussian_log_harnack_sharpness() {
    let _guard = serial();
    let start = Instant::now();
    let heat = SdeProblem::heat(1, 1.0);
    let mut sweep = Vec::new();
    for x in [0.5, 1.0, 1.5, 2.0, 2.5] {
        for (t, gap) in [(1.0, 1.0), (1.0, 1.25), (0.5, 0.75), (0.5, 1.0)] {
            let y: f64 = x + gap;
            let lambda = (y - x) / t;
            sweep.push(SweepInstance { x: vec![x], y: vec![y], s: 0.0, t, f: TestFunction::exp_tilt(&[lambda]) });
        }
    }
    // Brownian increments are exact in one step
    let cfg = McConfig::new(100_000, 2024).step(1.0);
    let fit = fit_empirical_constant(StatementId::LogFitted, &heat, 1.0, &sweep, &cfg, false).unwrap();
    let pass = sweep.len() == 20 && (0.45..=0.55).contains(&fit.c_emp);
    let detail = format!("C_emp = {:.4} over {} instances (sharp value 0.5)", fit.c_emp, sweep.len());
    report(2, "Gaussian log-Harnack sharpness", pass, &detail, start.elapsed(), Duration::from_secs(120));
}

#[test]
fn c03_zvonkin_certificate() {
    let _guard = serial();
    let start = Instant::now();
    let b = build_drift("gauss-bump", 1, &params(&[("amplitude", &[3.0])])).unwrap();
    let grid = SpaceTimeGrid::new(1, 321, 8.0, 0.0, 2.0, 64).unwrap();
    let z = build_zvonkin(&CoefficientField::identity(1), &b, &grid).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..1000)
        .map(|_| {
            let x: f64 = rng.random_range(-7.0..7.0);
            let y: f64 = if rng.random_bool(0.5) { x + rng.random_range(-1e-3..1e-3) } else { rng.random_range(-7.0..7.0) };
            (vec![x], vec![if y == x { x + 1e-4 } else { y }])
        })
        .collect();
    let r0 = 0.5 * z.t0();
    let check = bilipschitz_check(&z.map, r0, &pairs).unwrap();
    let pass = z.map.grad_bound() <= 0.5 && check.holds && check.pairs == 1000;
    let detail = format!(
        "T0 = {} after {} halvings, sup|grad u| <= {:.3}, distortion in [{:.3}, {:.3}] on {} pairs",
        z.t0(),
        z.summary.halvings,
        z.map.grad_bound(),
        check.min_ratio,
        check.max_ratio,
        check.pairs
    );
    report(3, "Zvonkin certificate", pass, &detail, start.elapsed(), Duration::from_secs(60));
}

#[test]
fn c04_ito_tanaka_constants() {
    let _guard = serial();
    let start = Instant::now();
    let c = 0.8;
    let b = build_drift("constant", 1, &params(&[("c", &[c])])).unwrap();
    let grid = SpaceTimeGrid::new(1, 161, 8.0, 0.0, 1.0, 32).unwrap();
    let it = build_ito_tanaka(&CoefficientField::identity(1), &b, &grid, &DEFAULT_LAMBDA_SCHEDULE).unwrap();
    let b_hat = it.transformed_drift();
    let mut worst = 0.0f64;
    for k in 0..=40 {
        let x = -6.0 + 0.3 * k as f64;
        for t in [0.0, 0.37, 1.0] {
            worst = worst.max((b_hat.eval_checked(t, &[x]).unwrap()[0] - c).abs());
        }
    }
    let h = &it.constants;
    let pass = worst <= 1e-6 && h.k1 == 2.0 * it.lambda && h.kappa1 == 0.5 && h.delta1 == 3.0;
    let detail = format!(
        "lambda = {}, max |b_hat - c| = {:.1e}, K1 = {}, kappa1 = {}, delta1 = {}",
        it.lambda, worst, h.k1, h.kappa1, h.delta1
    );
    report(4, "Ito-Tanaka constants", pass, &detail, start.elapsed(), Duration::from_secs(30));
}

fn holder_problem() -> (CoefficientField, SdeProblem) {
    let b = build_drift("holder-bump", 1, &params(&[("amplitude", &[1.0]), ("theta", &[0.5])])).unwrap();
    let p = SdeProblem::brownian(b.clone(), CoefficientField::identity(1), 1.0).unwrap();
    (b, p)
}

#[test]
fn c05_pushforward_identity() {
    let _guard = serial();
    let start = Instant::now();
    let (b, problem) = holder_problem();
    let grid = SpaceTimeGrid::new(1, 401, 10.0, 0.0, 1.0, 200).unwrap();
    let it = build_ito_tanaka(&CoefficientField::identity(1), &b, &grid, &DEFAULT_LAMBDA_SCHEDULE).unwrap();
    let conj = it.conjugate_problem(1.0).unwrap();
    let spec = EnsembleSpec::new(100_000, 55).step(1.0 / 512.0);
    let r = pushforward_consistency(&problem, &it.map, &conj, &[0.2], 0.5, &spec).unwrap();
    let pass = r.ks_max < r.ks_critical;
    let detail = format!("lambda = {}, KS = {:.5}, 1% critical = {:.5}", it.lambda, r.ks_max, r.ks_critical);
    report(5, "push-forward identity", pass, &detail, start.elapsed(), Duration::from_secs(120));
}

#[test]
fn c06_explicit_constant_verdicts() {
    let _guard = serial();
    let start = Instant::now();
    let (b, problem) = holder_problem();
    let grid = SpaceTimeGrid::new(1, 401, 10.0, 0.0, 1.0, 200).unwrap();
    let it = build_ito_tanaka(&CoefficientField::identity(1), &b, &grid, &DEFAULT_LAMBDA_SCHEDULE).unwrap();
    let conj = it.conjugate_problem(1.0).unwrap();
    let consts = StatementConstants::from_harnack(&it.constants);
    let (kappa, delta) = (it.constants.kappa1, it.constants.delta1);
    let p1 = power_threshold(delta, kappa).ceil() + 1.0;
    let ps = [p1, 2.0 * p1];
    let cfg = McConfig::new(20_000, 66).step(1.0 / 128.0);
    let log_f = [TestFunction::bump(&[0.5], 0.7, 2.0).unwrap(), TestFunction::exp_tilt(&[0.8])];
    let pow_f = TestFunction::bump(&[-0.3], 0.6, 1.0).unwrap();
    let cases = [
        (-1.0, -0.5, 0.25),
        (-0.5, 0.0, 0.5),
        (0.0, 0.3, 1.0),
        (0.3, -0.3, 0.75),
        (1.0, 0.0, 1.0),
        (-0.2, 0.2, 0.1),
        (0.8, 1.6, 0.5),
    ];
    let mut counts = [0usize; 3];
    let mut n = 0;
    for (problem, log_id, pow_id) in [
        (&conj, StatementId::LogMonotone, StatementId::PowerMonotone),
        (&problem, StatementId::LogExplicit, StatementId::PowerExplicit),
    ] {
        for (k, &(x, y, t)) in cases.iter().enumerate() {
            let c = cfg.clone().with_seed(derive_seed(cfg.seed, k as u64));
            let mut verdicts = Vec::new();
            for f in &log_f {
                verdicts.push(verify_log_harnack(log_id, problem, &consts, &[x], &[y], 0.0, t, f, &c).unwrap().verdict);
            }
            for p in ps {
                verdicts.push(verify_power_harnack(pow_id, problem, &consts, p, &[x], &[y], t, &pow_f, &c).unwrap().verdict);
            }
            for v in verdicts {
                n += 1;
                counts[match v {
                    Verdict::Holds => 0,
                    Verdict::Inconclusive => 1,
                    Verdict::Violated => 2,
                }] += 1;
            }
        }
    }
    let inconclusive = counts[1] as f64 / n as f64;
    let pass = n >= 50 && counts[2] == 0 && inconclusive <= 0.2;
    let detail = format!(
        "K1 = {:.3}, kappa1 = {}, delta1 = {}, p in {:?}: {} instances, {} HOLDS, {} INCONCLUSIVE, {} VIOLATED",
        it.constants.k1, kappa, delta, ps, n, counts[0], counts[1], counts[2]
    );
    report(6, "explicit-constant Harnack verdicts", pass, &detail, start.elapsed(), Duration::from_secs(600));
}

#[test]
fn c07_stable_kernel_and_harnack() {
    let _guard = serial();
    let start = Instant::now();
    let problem = SdeProblem::stable(CoefficientField::zero_drift(1), 1.0, 3.0).unwrap();
    let cfg = McConfig::new(100_000, 77).step(1.0);
    let offsets: Vec<f64> = (-16..=16).map(|k| 0.5 * k as f64).collect();
    let kb = verify_kernel_bounds(&problem, 1.0, &[-1.0, 0.0, 1.5], &offsets, &cfg, false).unwrap();
    let c_h = harnack_constant_from_kernel(kb.c_fit, 1.0, 1);
    let f = TestFunction::bump(&[0.0], 0.5, 3.0).unwrap();
    let mut holds = 0;
    let mut total = 0;
    for (i, t) in [0.25, 0.5, 1.0, 2.0, 3.0].into_iter().enumerate() {
        for (j, (x, y)) in [(0.0, 1.0), (1.0, 0.0), (-2.0, 2.0), (0.5, 4.0)].into_iter().enumerate() {
            let c = cfg.clone().with_paths(50_000).with_seed(derive_seed(7, (10 * i + j) as u64)).step(0.25);
            let r = verify_stable_harnack(&problem, &f, t, &[x], &[y], c_h, &c).unwrap();
            total += 1;
            holds += (r.verdict == Verdict::Holds) as usize;
        }
    }
    let pass = kb.c_fit >= std::f64::consts::PI - 0.05 && kb.ratio_bound_holds && holds == total && total == 20;
    let detail = format!(
        "c = {:.3} from {} probes ({} dropped), ratio/bound <= {:.3e} on {} probes, C = {:.1}: {holds}/{total} HOLDS",
        kb.c_fit,
        kb.probes.len(),
        kb.warnings.len(),
        kb.ratio_bound_max,
        kb.ratio_probes,
        c_h
    );
    report(7, "stable kernel bounds and Harnack", pass, &detail, start.elapsed(), Duration::from_secs(300));
}

#[test]
fn c08_coupling() {
    let _guard = serial();
    let start = Instant::now();
    let heat = SdeProblem::heat(1, 1.0);
    let spec = CouplingSpec { k: 0.0, n_pairs: 10_000, dt: Some(1.0 / 1024.0), seed: 88 };
    let s = simulate_coupled_pair(&heat, &[0.0], &[1.0], &spec).unwrap();
    let pass = s.success_fraction == 1.0 && s.density.within(1.0, 3.0);
    let detail = format!(
        "success fraction = {}, E R = {:.4} +- {:.4}",
        s.success_fraction, s.density.mean, s.density.stderr
    );
    report(8, "coupling", pass, &detail, start.elapsed(), Duration::from_secs(60));
}

#[test]
fn c09_gradient_estimate() {
    let _guard = serial();
    let start = Instant::now();
    let heat = SdeProblem::heat(1, 1.0);
    let f = TestFunction::sin(1, 0);
    let mut worst = 0.0f64;
    for (i, t) in [0.25, 0.5, 1.0].into_iter().enumerate() {
        for (j, x) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
            let cfg = McConfig::new(100_000, derive_seed(99, (3 * i + j) as u64)).step(t);
            let g = estimate_gradient_ratio(&heat, &f, t, &[x], &cfg).unwrap();
            worst = worst.max(g.ratio);
        }
    }
    let sigma = build_diffusion("sign-step", 1, &Params::new()).unwrap();
    let cfg = McConfig::new(20_000, 999).step(1.0 / 64.0);
    let family = mollified_gradient_ratios(&CoefficientField::zero_drift(1), &sigma, &[1, 2, 4, 8], &f, 1.0, &[0.0], &cfg).unwrap();
    let ratios: Vec<f64> = family.iter().map(|(_, g)| g.ratio).collect();
    let first = ratios[0];
    let bounded = ratios.iter().all(|r| r.is_finite() && *r <= 2.0 * first);
    let pass = worst <= 1.05 && bounded;
    let detail = format!("max heat ratio = {worst:.4}, mollified ratios over n = 1,2,4,8: {ratios:.4?}");
    report(9, "gradient estimate", pass, &detail, start.elapsed(), Duration::from_secs(120));
}

#[test]
fn c10_interpolation_identity() {
    let _guard = serial();
    let start = Instant::now();
    let heat = SdeProblem::heat(1, 1.0);
    let f = TestFunction::exp_tilt(&[1.0]);
    let cfg = InterpolationConfig { seed: 1010, ..Default::default() };
    let cfg = InterpolationConfig { dt: Some(1.0), ..cfg };
    let r = verify_interpolation_identity(&heat, &f, 0.0, 0.5, 1.0, 0.0, &cfg).unwrap();
    let pass = r.verdict == Verdict::Holds && r.nodes.len() == 5;
    let detail = format!(
        "lhs = {:.5}, rhs = {:.5}, residual = {:.2e}, 3 stderr = {:.2e}",
        r.lhs,
        r.rhs,
        r.residual,
        3.0 * r.stderr
    );
    report(10, "interpolation identity", pass, &detail, start.elapsed(), Duration::from_secs(120));
}
