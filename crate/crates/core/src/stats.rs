//! Sample statistics: running moments, Monte Carlo estimates with CLT intervals,
//! Kolmogorov–Smirnov distances and quantiles.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::math::{log, sqrt};

/// Normal quantile for the default 99% two-sided confidence level.
pub const Z_99: f64 = 2.576;

/// Two-sided normal quantile for the supported confidence levels.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 4] = [(0.90, 1.645), (0.95, 1.96), (0.99, Z_99), (0.999, 3.291)];
    TABLE
        .iter()
        .find(|(c, _)| (c - confidence).abs() < 1e-12)
        .map(|(_, z)| *z)
        .ok_or_else(|| {
            crate::Error::Argument(alloc::format!(
                "unsupported confidence level {confidence}; use 0.90, 0.95, 0.99 or 0.999"
            ))
        })
}

/// Welford running mean and variance.
#[derive(Clone, Copy, Debug, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::new();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// A Monte Carlo mean with its CLT confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n: usize,
    pub confidence: f64,
    pub z: f64,
    pub half_width: f64,
}

impl McEstimate {
    pub fn from_moments(moments: &Welford) -> Self {
        Self::from_parts(moments.mean(), sqrt(moments.variance() / moments.count().max(1) as f64), moments.count())
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        Self::from_moments(&samples.into_iter().collect())
    }

    /// An estimate with a given mean and standard error at 99% confidence.
    pub fn from_parts(mean: f64, stderr: f64, n: usize) -> Self {
        McEstimate {
            mean,
            stderr,
            n,
            confidence: 0.99,
            z: Z_99,
            half_width: Z_99 * stderr,
        }
    }

    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        Self::from_parts(value, 0.0, 0)
    }

    pub fn with_confidence(mut self, confidence: f64) -> Result<Self> {
        self.z = z_for_confidence(confidence)?;
        self.confidence = confidence;
        self.half_width = self.z * self.stderr;
        Ok(self)
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Two-sample Kolmogorov–Smirnov statistic. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return arg_err("KS statistic needs two non-empty samples");
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    let c = sqrt(-0.5 * log(alpha / 2.0));
    let (n, m) = (n as f64, m as f64);
    c * sqrt((n + m) / (n * m))
}

/// One-sample KS distance to a continuous CDF. Sorts `samples` in place.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return arg_err("KS statistic needs a non-empty sample");
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (k, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    Ok(d)
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(n - 1);
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.0];
        let w: Welford = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((w.mean() - mean).abs() < 1e-14);
        assert!((w.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_have_zero_width() {
        let e = McEstimate::from_samples(core::iter::repeat(1.0).take(100));
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.half_width, 0.0);
        assert_eq!(e.n, 100);
    }

    #[test]
    fn ks_of_identical_samples_is_zero_and_disjoint_is_one() {
        let mut a = [1.0, 2.0, 3.0];
        let mut b = [3.0, 1.0, 2.0];
        assert_eq!(ks_two_sample(&mut a, &mut b).unwrap(), 0.0);
        let mut c = [10.0, 11.0];
        assert_eq!(ks_two_sample(&mut a, &mut c).unwrap(), 1.0);
    }

    #[test]
    fn ks_critical_value_at_one_percent() {
        // c(0.01) = sqrt(ln(200) / 2) = 1.6276
        let c = ks_critical_two_sample(0.01, 100_000, 100_000);
        assert!((c - 1.62762 * libm::sqrt(2.0 / 100_000.0)).abs() < 1e-6);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.5), 1.5);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
    }
}
