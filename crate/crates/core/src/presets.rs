//! Named drifts, diffusions and test functions with parameter schemas.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, Regularity};
use crate::math::{exp, is_integer, pow, sin, sqrt};
use crate::semigroup::TestFunction;

/// Parameter values by name; scalars are one-element vectors.
pub type Params = BTreeMap<String, Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    Drift,
    Diffusion,
    TestFunction,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    /// Default value; vectors are broadcast to the dimension when given one entry.
    pub default: &'static [f64],
    pub description: &'static str,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub kind: PresetKind,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
}

const fn p(name: &'static str, default: &'static [f64], description: &'static str) -> ParamSpec {
    ParamSpec { name, default, description }
}

const DIRECTION: ParamSpec = p("direction", &[1.0], "unit direction of the drift (normalized; one entry means e1)");

/// Every preset, sorted by kind and then name.
pub const PRESETS: &[PresetInfo] = &[
    PresetInfo { name: "constant", kind: PresetKind::Drift, description: "b(x) = c", params: &[p("c", &[1.0], "drift vector")] },
    PresetInfo {
        name: "gauss-bump",
        kind: PresetKind::Drift,
        description: "b(x) = A exp(-|x|^2/w^2) e; smooth and bounded",
        params: &[p("amplitude", &[1.0], "A"), p("width", &[1.0], "w"), DIRECTION],
    },
    PresetInfo {
        name: "holder-bump",
        kind: PresetKind::Drift,
        description: "b(x) = A (1 - |x|^theta)_+ e; bounded, theta-Hoelder",
        params: &[p("amplitude", &[1.0], "A"), p("theta", &[0.5], "Hoelder exponent in (0,1)"), DIRECTION],
    },
    PresetInfo {
        name: "holder-sign",
        kind: PresetKind::Drift,
        description: "b_i(x) = A sign(x_i) min(|x_i|^theta, 1); bounded, theta-Hoelder",
        params: &[p("amplitude", &[0.3], "A"), p("theta", &[0.7], "Hoelder exponent in (0,1)")],
    },
    PresetInfo { name: "ou-drift", kind: PresetKind::Drift, description: "b(x) = -theta x", params: &[p("theta", &[1.0], "mean reversion rate")] },
    PresetInfo { name: "zero", kind: PresetKind::Drift, description: "b = 0", params: &[] },
    PresetInfo { name: "diag", kind: PresetKind::Diffusion, description: "sigma = diag(entries)", params: &[p("entries", &[1.0], "diagonal")] },
    PresetInfo {
        name: "footnote-matrix",
        kind: PresetKind::Diffusion,
        description: "sigma = [[1,-1],[-1,1]] (d = 2); a = sigma sigma* is singular although sigma sigma* + (sigma sigma*)* is not",
        params: &[],
    },
    PresetInfo { name: "identity", kind: PresetKind::Diffusion, description: "sigma = I", params: &[] },
    PresetInfo { name: "scalar", kind: PresetKind::Diffusion, description: "sigma = c I", params: &[p("c", &[1.0], "scale")] },
    PresetInfo {
        name: "sign-step",
        kind: PresetKind::Diffusion,
        description: "sigma(x) = (1 + eps sign(x_1)) I; discontinuous",
        params: &[p("eps", &[0.5], "jump size in [0,1)")],
    },
    PresetInfo {
        name: "sin-modulated",
        kind: PresetKind::Diffusion,
        description: "sigma(x) = (1 + eps sin(x_1)) I; smooth",
        params: &[p("eps", &[0.5], "modulation in [0,1)")],
    },
    PresetInfo {
        name: "bump",
        kind: PresetKind::TestFunction,
        description: "f(x) = 1 + h exp(-|x - c|^2/w^2)",
        params: &[p("center", &[0.0], "c"), p("width", &[1.0], "w"), p("height", &[1.0], "h")],
    },
    PresetInfo { name: "const", kind: PresetKind::TestFunction, description: "f = value", params: &[p("value", &[1.0], "value")] },
    PresetInfo { name: "cos", kind: PresetKind::TestFunction, description: "f(x) = cos(x_i)", params: &[p("coord", &[0.0], "index i")] },
    PresetInfo {
        name: "exp-tilt",
        kind: PresetKind::TestFunction,
        description: "f(x) = 1 + min(exp(<lambda, x>), 1e6)",
        params: &[p("lambda", &[1.0], "tilt vector")],
    },
    PresetInfo {
        name: "monomial",
        kind: PresetKind::TestFunction,
        description: "f(x) = clamp(x_i^k, -clip, clip)",
        params: &[p("coord", &[0.0], "index i"), p("power", &[2.0], "k"), p("clip", &[1e6], "clip level")],
    },
    PresetInfo { name: "sin", kind: PresetKind::TestFunction, description: "f(x) = sin(x_i)", params: &[p("coord", &[0.0], "index i")] },
];

pub fn find_preset(kind: PresetKind, name: &str) -> Option<&'static PresetInfo> {
    PRESETS.iter().find(|p| p.kind == kind && p.name == name)
}

fn unknown(kind: PresetKind, name: &str) -> Error {
    let names: Vec<&str> = PRESETS.iter().filter(|p| p.kind == kind).map(|p| p.name).collect();
    Error::Configuration(alloc::format!("unknown {kind:?} preset `{name}`; known: {}", names.join(", ")))
}

struct Args<'a> {
    info: &'static PresetInfo,
    params: &'a Params,
    dim: usize,
}

impl<'a> Args<'a> {
    fn new(kind: PresetKind, name: &str, params: &'a Params, dim: usize) -> Result<Self> {
        let info = find_preset(kind, name).ok_or_else(|| unknown(kind, name))?;
        for key in params.keys() {
            if !info.params.iter().any(|s| s.name == key) {
                return Err(Error::Configuration(alloc::format!("preset `{name}` has no parameter `{key}`")));
            }
        }
        Ok(Args { info, params, dim })
    }

    fn raw(&self, key: &str) -> &[f64] {
        match self.params.get(key) {
            Some(v) => v,
            None => self.info.params.iter().find(|s| s.name == key).expect("declared parameter").default,
        }
    }

    fn scalar(&self, key: &str) -> Result<f64> {
        match self.raw(key) {
            [v] => Ok(*v),
            v => Err(Error::Configuration(alloc::format!("`{key}` must be a scalar, got {} values", v.len()))),
        }
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        match self.raw(key) {
            [v] => Ok(alloc::vec![*v; self.dim]),
            v if v.len() == self.dim => Ok(v.to_vec()),
            v => Err(Error::Configuration(alloc::format!(
                "`{key}` needs 1 or {} values, got {}",
                self.dim,
                v.len()
            ))),
        }
    }

    /// `direction` normalized; a single entry means the first basis vector.
    fn direction(&self) -> Result<Vec<f64>> {
        let raw = self.raw("direction");
        let mut e = alloc::vec![0.0; self.dim];
        if raw.len() == 1 {
            e[0] = raw[0].signum();
        } else if raw.len() == self.dim {
            let n = sqrt(raw.iter().map(|v| v * v).sum());
            if !(n > 0.0) {
                return Err(Error::Configuration("`direction` must be nonzero".into()));
            }
            e.iter_mut().zip(raw).for_each(|(a, b)| *a = b / n);
        } else {
            return Err(Error::Configuration(alloc::format!("`direction` needs 1 or {} values", self.dim)));
        }
        Ok(e)
    }

    fn theta(&self) -> Result<f64> {
        let theta = self.scalar("theta")?;
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Configuration(alloc::format!("`theta` must lie in (0, 1), got {theta}")));
        }
        Ok(theta)
    }

    fn index(&self, key: &str) -> Result<usize> {
        let v = self.scalar(key)?;
        if v < 0.0 || !is_integer(v) || v as usize >= self.dim {
            return Err(Error::Configuration(alloc::format!("`{key}` must be an index below {}", self.dim)));
        }
        Ok(v as usize)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=crate::MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Configuration(alloc::format!("dimension must be in 1..={}", crate::MAX_DIM)))
    }
}

pub fn build_drift(name: &str, dim: usize, params: &Params) -> Result<CoefficientField> {
    check_dim(dim)?;
    let a = Args::new(PresetKind::Drift, name, params, dim)?;
    Ok(match name {
        "zero" => CoefficientField::zero_drift(dim),
        "constant" => CoefficientField::constant_vector("constant", &a.vector("c")?),
        "ou-drift" => {
            let theta = a.scalar("theta")?;
            CoefficientField::vector("ou-drift", dim, move |_, x, o| {
                for i in 0..x.len() {
                    o[i] = -theta * x[i];
                }
            })
        }
        "gauss-bump" => {
            let (amp, w, e) = (a.scalar("amplitude")?, a.scalar("width")?, a.direction()?);
            if !(w > 0.0) {
                return Err(Error::Configuration("`width` must be positive".into()));
            }
            CoefficientField::vector("gauss-bump", dim, move |_, x, o| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s = amp * exp(-r2 / (w * w));
                for i in 0..x.len() {
                    o[i] = s * e[i];
                }
            })
            .with_sup_norm(amp.abs())
        }
        "holder-bump" => {
            let (amp, theta, e) = (a.scalar("amplitude")?, a.theta()?, a.direction()?);
            CoefficientField::vector("holder-bump", dim, move |_, x, o| {
                let r = sqrt(x.iter().map(|v| v * v).sum());
                let s = amp * (1.0 - pow(r, theta)).max(0.0);
                for i in 0..x.len() {
                    o[i] = s * e[i];
                }
            })
            .with_regularity(Regularity::Hoelder { theta })
            .with_sup_norm(amp.abs())
            .with_hoelder_seminorm(amp.abs())
        }
        "holder-sign" => {
            let (amp, theta) = (a.scalar("amplitude")?, a.theta()?);
            CoefficientField::vector("holder-sign", dim, move |_, x, o| {
                for i in 0..x.len() {
                    let v = x[i];
                    o[i] = if v == 0.0 { 0.0 } else { amp * v.signum() * pow(v.abs(), theta).min(1.0) };
                }
            })
            .with_regularity(Regularity::Hoelder { theta })
            .with_sup_norm(amp.abs() * sqrt(dim as f64))
            .with_hoelder_seminorm(amp.abs() * pow(2.0, 1.0 - theta) * sqrt(dim as f64))
        }
        _ => return Err(unknown(PresetKind::Drift, name)),
    })
}

pub fn build_diffusion(name: &str, dim: usize, params: &Params) -> Result<CoefficientField> {
    check_dim(dim)?;
    let a = Args::new(PresetKind::Diffusion, name, params, dim)?;
    let scaled_identity = |label: &str, f: fn(f64, f64) -> f64, eps: f64| {
        CoefficientField::matrix(label, dim, move |_, x, o| {
            let s = f(eps, x[0]);
            o.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..x.len() {
                o[i * x.len() + i] = s;
            }
        })
    };
    Ok(match name {
        "identity" => CoefficientField::identity(dim),
        "scalar" => {
            let c = a.scalar("c")?;
            let mut m = alloc::vec![0.0; dim * dim];
            (0..dim).for_each(|i| m[i * dim + i] = c);
            CoefficientField::constant_matrix("scalar", dim, &m)
        }
        "diag" => {
            let e = a.vector("entries")?;
            let mut m = alloc::vec![0.0; dim * dim];
            (0..dim).for_each(|i| m[i * dim + i] = e[i]);
            CoefficientField::constant_matrix("diag", dim, &m)
        }
        "footnote-matrix" => {
            if dim != 2 {
                return Err(Error::Configuration("`footnote-matrix` is defined for d = 2".into()));
            }
            CoefficientField::constant_matrix("footnote-matrix", 2, &[1.0, -1.0, -1.0, 1.0])
        }
        "sign-step" => {
            let eps = a.scalar("eps")?;
            if !(0.0..1.0).contains(&eps) {
                return Err(Error::Configuration("`eps` must lie in [0, 1)".into()));
            }
            scaled_identity("sign-step", |e, x| if x >= 0.0 { 1.0 + e } else { 1.0 - e }, eps)
                .with_regularity(Regularity::BoundedMeasurable)
                .with_sup_norm((1.0 + eps) * sqrt(dim as f64))
        }
        "sin-modulated" => {
            let eps = a.scalar("eps")?;
            if !(0.0..1.0).contains(&eps) {
                return Err(Error::Configuration("`eps` must lie in [0, 1)".into()));
            }
            scaled_identity("sin-modulated", |e, x| 1.0 + e * sin(x), eps).with_sup_norm((1.0 + eps) * sqrt(dim as f64))
        }
        _ => return Err(unknown(PresetKind::Diffusion, name)),
    })
}

pub fn build_test_function(name: &str, dim: usize, params: &Params) -> Result<TestFunction> {
    check_dim(dim)?;
    let a = Args::new(PresetKind::TestFunction, name, params, dim)?;
    match name {
        "exp-tilt" => Ok(TestFunction::exp_tilt(&a.vector("lambda")?)),
        "sin" => Ok(TestFunction::sin(dim, a.index("coord")?)),
        "cos" => Ok(TestFunction::cos(dim, a.index("coord")?)),
        "bump" => TestFunction::bump(&a.vector("center")?, a.scalar("width")?, a.scalar("height")?),
        "monomial" => {
            let k = a.scalar("power")?;
            if k < 0.0 || !is_integer(k) {
                return Err(Error::Configuration("`power` must be a nonnegative integer".into()));
            }
            TestFunction::monomial(dim, a.index("coord")?, k as u32, a.scalar("clip")?)
        }
        "const" => Ok(TestFunction::constant(dim, a.scalar("value")?)),
        _ => Err(unknown(PresetKind::TestFunction, name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_builds_with_defaults() {
        let none = Params::new();
        for info in PRESETS {
            let dim = if info.name == "footnote-matrix" { 2 } else { 1 };
            let ok = match info.kind {
                PresetKind::Drift => build_drift(info.name, dim, &none).is_ok(),
                PresetKind::Diffusion => build_diffusion(info.name, dim, &none).is_ok(),
                PresetKind::TestFunction => build_test_function(info.name, dim, &none).is_ok(),
            };
            assert!(ok, "{}", info.name);
        }
    }

    #[test]
    fn holder_bump_shape() {
        let mut params = Params::new();
        params.insert("amplitude".into(), alloc::vec![2.0]);
        let b = build_drift("holder-bump", 1, &params).unwrap();
        assert_eq!(b.eval_checked(0.0, &[0.0]).unwrap(), alloc::vec![2.0]);
        assert_eq!(b.eval_checked(0.0, &[1.5]).unwrap(), alloc::vec![0.0]);
        assert_eq!(b.regularity(), Regularity::Hoelder { theta: 0.5 });
    }

    #[test]
    fn bad_parameters_are_configuration_errors() {
        let mut params = Params::new();
        params.insert("nope".into(), alloc::vec![1.0]);
        assert!(matches!(build_drift("zero", 1, &params), Err(Error::Configuration(_))));
        assert!(matches!(build_drift("nope", 1, &Params::new()), Err(Error::Configuration(_))));
        assert!(build_diffusion("footnote-matrix", 1, &Params::new()).is_err());
    }
}
