//! Scenario files: TOML with one `[[scenario]]` table per run.

use std::collections::BTreeMap;
use std::path::Path;

use harnack_core::presets::Params;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConditionCheck,
    TransformBuild,
    HarnackVerify,
    KernelBounds,
    Coupling,
    GradientEstimate,
    InterpolationIdentity,
    Mollification,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::ConditionCheck => "condition-check",
            ExperimentKind::TransformBuild => "transform-build",
            ExperimentKind::HarnackVerify => "harnack-verify",
            ExperimentKind::KernelBounds => "kernel-bounds",
            ExperimentKind::Coupling => "coupling",
            ExperimentKind::GradientEstimate => "gradient-estimate",
            ExperimentKind::InterpolationIdentity => "interpolation-identity",
            ExperimentKind::Mollification => "mollification",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Zvonkin,
    #[default]
    ItoTanaka,
}

/// A scalar or a vector parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    One(f64),
    Many(Vec<f64>),
}

/// A preset name with parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub preset: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl PresetRef {
    pub fn named(name: &str) -> Self {
        PresetRef { preset: name.into(), params: BTreeMap::new() }
    }

    pub fn params(&self) -> Params {
        self.params
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    ParamValue::One(x) => vec![*x],
                    ParamValue::Many(xs) => xs.clone(),
                };
                (k.clone(), v)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis (odd).
    pub m: usize,
    /// The box is `[-half_width, half_width]^d`.
    pub half_width: f64,
    pub steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { m: 161, half_width: 8.0, steps: 64 }
    }
}

/// Constants supplied by hand instead of derived or fitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    pub t: f64,
    /// Overrides the scenario's test functions for this instance.
    pub f: Option<PresetRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: ExperimentKind,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "unit")]
    pub horizon: f64,
    /// Stability index; absent means Brownian noise.
    pub alpha: Option<f64>,
    #[serde(default = "zero_drift")]
    pub drift: PresetRef,
    #[serde(default = "identity")]
    pub diffusion: PresetRef,
    #[serde(default = "one_u64")]
    pub seed: u64,
    pub n_paths: Option<usize>,
    pub dt: Option<f64>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub transform: TransformKind,
    pub lambda_schedule: Option<Vec<f64>>,

    /// Statement ids for `harnack-verify`.
    #[serde(default)]
    pub statements: Vec<String>,
    pub constants: Option<ConstantSpec>,
    /// Fit the multiplicative constant of the fitted log statements over the instances.
    #[serde(default)]
    pub fit: bool,
    /// Refit with twice the paths and report whether the constant moved by less than 10%.
    #[serde(default)]
    pub stability: bool,
    /// Exponents for the power statements; empty means the two smallest admissible integers
    /// `ceil((1 + δ/κ)²) + 1` and twice that.
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default, rename = "function")]
    pub functions: Vec<PresetRef>,
    #[serde(default, rename = "instance")]
    pub instances: Vec<Instance>,

    /// Base points (condition checks, gradient estimates, push-forward start, interpolation).
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub times: Vec<f64>,
    /// Angular resolution of the direction probes.
    pub resolution: Option<f64>,
    /// Number of random probe pairs for bi-Lipschitz checks.
    pub probe_pairs: Option<usize>,
    /// Push-forward check time for `transform-build`.
    pub pushforward_t: Option<f64>,

    #[serde(default)]
    pub starts: Vec<f64>,
    #[serde(default)]
    pub offsets: Vec<f64>,

    pub y: Option<Vec<f64>>,
    pub k: Option<f64>,

    #[serde(default)]
    pub mollify: Vec<u32>,

    pub s: Option<f64>,
    pub u: Option<f64>,
    pub n_outer: Option<usize>,
    pub n_inner: Option<usize>,
    pub nodes: Option<usize>,
    pub grid_points: Option<usize>,
    pub replicates: Option<usize>,

    /// Also write a gnuplot script next to the CSV table.
    #[serde(default)]
    pub plot: bool,
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn zero_drift() -> PresetRef {
    PresetRef::named("zero")
}
fn identity() -> PresetRef {
    PresetRef::named("identity")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

pub fn parse_scenarios(text: &str, origin: &str) -> Result<Vec<Scenario>, LabError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        LabError::Parse { origin: origin.into(), line, col, message: e.message().trim().into() }
    })?;
    if file.scenarios.is_empty() {
        return Err(LabError::Parse { origin: origin.into(), line: 1, col: 1, message: "no scenarios".into() });
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &file.scenarios {
        if !seen.insert(s.name.as_str()) {
            return Err(LabError::Parse {
                origin: origin.into(),
                line: 1,
                col: 1,
                message: format!("duplicate scenario name `{}`", s.name),
            });
        }
    }
    Ok(file.scenarios)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    parse_scenarios(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenarios("[[scenario]]\nname = \"a\"\nexperiment = \"coupling\"\n", "t").unwrap();
        assert_eq!(s[0].dim, 1);
        assert_eq!(s[0].drift.preset, "zero");
        assert_eq!(s[0].diffusion.preset, "identity");
        assert_eq!(s[0].seed, 1);
    }

    #[test]
    fn scalar_and_vector_params() {
        let text = "[[scenario]]\nname = \"a\"\nexperiment = \"coupling\"\n\
                    drift = { preset = \"gauss-bump\", params = { amplitude = 3, direction = [1.0] } }\n";
        let s = parse_scenarios(text, "t").unwrap();
        let p = s[0].drift.params();
        assert_eq!(p["amplitude"], vec![3.0]);
        assert_eq!(p["direction"], vec![1.0]);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let text = "[[scenario]]\nname = \"a\"\nexperiment = \"nope\"\n";
        match parse_scenarios(text, "t") {
            Err(LabError::Parse { line, col, .. }) => assert_eq!((line, col), (3, 14)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_has_no_scenarios() {
        match parse_scenarios("", "t") {
            Err(LabError::Parse { message, .. }) => assert_eq!(message, "no scenarios"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let one = "[[scenario]]\nname = \"a\"\nexperiment = \"coupling\"\n";
        assert!(parse_scenarios(&format!("{one}{one}"), "t").is_err());
    }
}
