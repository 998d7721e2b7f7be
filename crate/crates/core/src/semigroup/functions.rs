//! Test functions `f` fed to the semigroup estimators.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{arg_err, Result};
use crate::math::{cos, exp, pow, sin};

/// Cap applied to the exponential in [`TestFunction::exp_tilt`].
pub const EXP_TILT_CAP: f64 = 1e6;

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A scalar function on `ℝᵈ` with optional analytic gradient and declared lower bounds.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradFn>>,
    at_least_one: bool,
    nonnegative: bool,
    constant: Option<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("at_least_one", &self.at_least_one)
            .field("nonnegative", &self.nonnegative)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    /// An arbitrary function with no declared bounds or gradient.
    pub fn new<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            name: name.into(),
            dim,
            value: Arc::new(f),
            gradient: None,
            at_least_one: false,
            nonnegative: false,
            constant: None,
        }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    /// Declares `f ≥ 1` (and hence `f ≥ 0`).
    pub fn at_least_one(mut self) -> Self {
        self.at_least_one = true;
        self.nonnegative = true;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.nonnegative = true;
        self
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = TestFunction::new(&alloc::format!("const({c})"), dim, move |_| c)
            .with_gradient(|_, g| g.iter_mut().for_each(|v| *v = 0.0));
        f.at_least_one = c >= 1.0;
        f.nonnegative = c >= 0.0;
        f.constant = Some(c);
        f
    }

    /// `1 + min(exp(⟨λ, x⟩), 10⁶)`.
    pub fn exp_tilt(lambda: &[f64]) -> Self {
        let l: Vec<f64> = lambda.to_vec();
        let lg = l.clone();
        let name = alloc::format!("exp-tilt({:?})", lambda);
        TestFunction::new(&name, lambda.len(), move |x| {
            let u: f64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
            1.0 + exp(u).min(EXP_TILT_CAP)
        })
        .with_gradient(move |x, g| {
            let e = exp(lg.iter().zip(x).map(|(a, b)| a * b).sum());
            let s = if e < EXP_TILT_CAP { e } else { 0.0 };
            for (gi, li) in g.iter_mut().zip(&lg) {
                *gi = li * s;
            }
        })
        .at_least_one()
    }

    /// `sin(x_i)`.
    pub fn sin(dim: usize, coord: usize) -> Self {
        TestFunction::new(&alloc::format!("sin(x{coord})"), dim, move |x| sin(x[coord])).with_gradient(move |x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            g[coord] = cos(x[coord]);
        })
    }

    /// `cos(x_i)`.
    pub fn cos(dim: usize, coord: usize) -> Self {
        TestFunction::new(&alloc::format!("cos(x{coord})"), dim, move |x| cos(x[coord])).with_gradient(move |x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            g[coord] = -sin(x[coord]);
        })
    }

    /// `1 + height·exp(−|x − center|²/width²)`, a smoothed indicator of a ball.
    pub fn bump(center: &[f64], width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0) || !(height >= 0.0) {
            return arg_err("bump needs width > 0 and height ≥ 0");
        }
        let c = center.to_vec();
        let cg = c.clone();
        let name = alloc::format!("bump({:?},{width},{height})", center);
        Ok(TestFunction::new(&name, center.len(), move |x| {
            let r2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            1.0 + height * exp(-r2 / (width * width))
        })
        .with_gradient(move |x, g| {
            let r2: f64 = cg.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let e = height * exp(-r2 / (width * width));
            for i in 0..g.len() {
                g[i] = -2.0 * (x[i] - cg[i]) / (width * width) * e;
            }
        })
        .at_least_one())
    }

    /// `clamp(x_i^k, −clip, clip)`.
    pub fn monomial(dim: usize, coord: usize, power: u32, clip: f64) -> Result<Self> {
        if coord >= dim || !(clip > 0.0) {
            return arg_err("monomial needs coord < dim and clip > 0");
        }
        let name = alloc::format!("x{coord}^{power}");
        let mut f = TestFunction::new(&name, dim, move |x| pow(x[coord], power as f64).clamp(-clip, clip))
            .with_gradient(move |x, g| {
                g.iter_mut().for_each(|v| *v = 0.0);
                let v = pow(x[coord], power as f64);
                if power > 0 && v.abs() < clip {
                    g[coord] = power as f64 * pow(x[coord], (power - 1) as f64);
                }
            });
        f.nonnegative = power % 2 == 0;
        Ok(f)
    }

    /// `f + c`; adjusts the declared bounds when `c ≥ 0`.
    pub fn shifted(self, c: f64) -> Self {
        let inner = self.value.clone();
        TestFunction {
            name: alloc::format!("{}+{c}", self.name),
            dim: self.dim,
            value: Arc::new(move |x| inner(x) + c),
            gradient: self.gradient.clone(),
            at_least_one: (self.at_least_one && c >= 0.0) || (self.nonnegative && c >= 1.0),
            nonnegative: self.nonnegative && c >= 0.0,
            constant: self.constant.map(|v| v + c),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_at_least_one(&self) -> bool {
        self.at_least_one
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    /// Writes `∇f(x)`; returns `false` if no gradient was declared.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> bool {
        match &self.gradient {
            Some(g) => {
                g(x, out);
                true
            }
            None => false,
        }
    }
}
