//! Monte Carlo estimators against closed forms.

use harnack_core::fields::CoefficientField;
use harnack_core::sde::{cauchy_cdf, simulate_paths, EnsembleSpec, SdeProblem};
use harnack_core::semigroup::{estimate_functional, estimate_gradient_ratio, Functional, McConfig, TestFunction};
use harnack_core::stats::{ks_critical_two_sample, ks_one_sample};

#[test]
fn heat_exponential_moment() {
    let heat = SdeProblem::heat(1, 2.0);
    for (x, t, lam) in [(0.0, 1.0, 1.0), (0.7, 0.3, -0.5), (-1.0, 2.0, 0.4)] {
        let f = TestFunction::exp_tilt(&[lam]);
        let est = estimate_functional(&heat, Functional::Plain, &f, 0.0, t, &[x], &McConfig::new(100_000, 1).step(t))
            .unwrap()
            .estimate;
        let exact = 1.0 + (lam * x + 0.5 * lam * lam * t).exp();
        assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    }
}

#[test]
fn heat_log_moment_of_exponential() {
    let heat = SdeProblem::heat(1, 1.0);
    let f = TestFunction::exp_tilt(&[0.6]);
    let est = estimate_functional(&heat, Functional::Log, &f, 0.0, 1.0, &[0.5], &McConfig::new(100_000, 2).step(1.0))
        .unwrap()
        .estimate;
    // E log(1 + e^{0.6 (0.5 + Z)}) by a dense midpoint rule against the Gaussian density
    let n = 200_000;
    let h = 20.0 / n as f64;
    let exact: f64 = (0..n)
        .map(|k| {
            let z = -10.0 + (k as f64 + 0.5) * h;
            (1.0 + (0.6 * (0.5 + z)).exp()).ln() * (-0.5 * z * z).exp() * h
        })
        .sum::<f64>()
        / (2.0 * std::f64::consts::PI).sqrt();
    assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
}

#[test]
fn heat_gradient_ratio_for_sine() {
    let heat = SdeProblem::heat(1, 1.0);
    let f = TestFunction::sin(1, 0);
    for (t, x) in [(0.5, 0.3), (1.0, -0.8)] {
        let g = estimate_gradient_ratio(&heat, &f, t, &[x], &McConfig::new(100_000, 3).step(t)).unwrap();
        let grad = (-t / 2.0_f64).exp() * x.cos();
        let rhs = 0.5 * (1.0 + (-2.0 * t).exp() * (2.0 * x).cos());
        assert!(g.rhs.within(rhs, 4.0), "{:?} vs {rhs}", g.rhs);
        assert!((g.ratio - grad * grad / rhs).abs() < 0.03, "{} vs {}", g.ratio, grad * grad / rhs);
    }
}

#[test]
fn cauchy_marginal_matches_its_distribution() {
    let p = SdeProblem::stable(CoefficientField::zero_drift(1), 1.0, 2.0).unwrap();
    let ens = simulate_paths(&p, &[0.4], &EnsembleSpec::new(50_000, 4).save_at(&[1.5]).step(0.25)).unwrap();
    let mut z: Vec<f64> = ens.coordinate(0, 0).iter().map(|v| v - 0.4).collect();
    let n = z.len();
    let d = ks_one_sample(&mut z, |v| cauchy_cdf(1.5, v)).unwrap();
    // one-sample critical value is the two-sample one with an infinite second sample
    assert!(d < ks_critical_two_sample(0.01, n, usize::MAX / 4), "KS = {d}");
}

#[test]
fn ornstein_uhlenbeck_variance() {
    let b = CoefficientField::vector("ou", 1, |_, x, out| out[0] = -x[0]);
    let p = SdeProblem::brownian(b, CoefficientField::identity(1), 1.0).unwrap();
    let f = TestFunction::monomial(1, 0, 2, 1e6).unwrap();
    let est = estimate_functional(&p, Functional::Plain, &f, 0.0, 1.0, &[1.0], &McConfig::new(100_000, 5).step(1.0 / 512.0))
        .unwrap()
        .estimate;
    let (m, v) = ((-1.0f64).exp(), 0.5 * (1.0 - (-2.0f64).exp()));
    assert!((est.mean - (m * m + v)).abs() < 4.0 * est.stderr + 2e-3, "{est:?}");
}
