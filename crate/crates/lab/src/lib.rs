//! Scenario runner around `harnack-core`: TOML scenario files in, JSON reports, CSV verdict
//! tables and gnuplot scripts out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use harnack_core::harnack::{fit_empirical_constant, EmpiricalConstant, HarnackReport, StatementId};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

pub use config::{load_scenarios, parse_scenarios, ExperimentKind, Scenario};
pub use error::LabError;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
    /// Replaces every scenario's seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub experiment: String,
    pub seed: u64,
    pub scenario: Scenario,
    /// Verdict counts, keyed `HOLDS`, `INCONCLUSIVE`, `VIOLATED`.
    pub verdicts: BTreeMap<String, usize>,
    pub result: Value,
    pub rows: Vec<HarnackReport>,
}

impl ScenarioReport {
    pub fn violated(&self) -> usize {
        self.verdicts.get("VIOLATED").copied().unwrap_or(0)
    }
}

/// Files written for one scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Written {
    pub json: PathBuf,
    pub csv: Option<PathBuf>,
    pub gnuplot: Option<PathBuf>,
}

pub fn run_scenario(sc: &Scenario) -> Result<ScenarioReport, LabError> {
    let outcome = experiments::run(sc)
        .map_err(|e| LabError::Scenario { scenario: sc.name.clone(), message: e.to_string() })?;
    let mut verdicts = BTreeMap::new();
    for r in &outcome.rows {
        *verdicts.entry(r.verdict.as_str().to_string()).or_insert(0) += 1;
    }
    Ok(ScenarioReport {
        name: sc.name.clone(),
        experiment: sc.experiment.as_str().into(),
        seed: sc.seed,
        scenario: sc.clone(),
        verdicts,
        result: outcome.result,
        rows: outcome.rows,
    })
}

pub fn write_report(report: &ScenarioReport, out_dir: &Path) -> Result<Written, LabError> {
    let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", out_dir.display()));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let json = out_dir.join(format!("{}.json", report.name));
    let mut text = serde_json::to_string_pretty(report).map_err(|e| LabError::Io(e.to_string()))?;
    text.push('\n');
    output::write_atomic(&json, text.as_bytes())?;
    let (mut csv, mut gnuplot) = (None, None);
    if !report.rows.is_empty() {
        let path = out_dir.join(format!("{}.csv", report.name));
        output::write_atomic(&path, output::csv_table(&report.rows)?.as_bytes())?;
        if report.scenario.plot {
            let gp = out_dir.join(format!("{}.gp", report.name));
            let csv_name = format!("{}.csv", report.name);
            output::write_atomic(&gp, output::gnuplot_script(&report.name, &csv_name).as_bytes())?;
            gnuplot = Some(gp);
        }
        csv = Some(path);
    }
    Ok(Written { json, csv, gnuplot })
}

fn with_overrides(scenarios: &[Scenario], opts: &RunOptions) -> Vec<Scenario> {
    scenarios
        .iter()
        .cloned()
        .map(|mut s| {
            if let Some(seed) = opts.seed {
                s.seed = seed;
            }
            s
        })
        .collect()
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, LabError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

pub type ScenarioResult = Result<(ScenarioReport, Written), LabError>;

/// Runs every scenario in a worker pool and writes its files. Results keep the input order.
pub fn run_all(scenarios: &[Scenario], opts: &RunOptions) -> Result<Vec<ScenarioResult>, LabError> {
    let scenarios = with_overrides(scenarios, opts);
    let pool = pool(opts.jobs)?;
    Ok(pool.install(|| {
        scenarios
            .par_iter()
            .map(|sc| {
                let report = run_scenario(sc)?;
                let written = write_report(&report, &opts.out_dir)?;
                Ok((report, written))
            })
            .collect()
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantFit {
    pub scenario: String,
    pub fit: EmpiricalConstant,
}

/// Fits the constant of every fitted log statement in every `harnack-verify` scenario,
/// with the doubled-path stability check.
pub fn fit_constants(scenarios: &[Scenario], opts: &RunOptions) -> Result<Vec<ConstantFit>, LabError> {
    let scenarios = with_overrides(scenarios, opts);
    let mut jobs = Vec::new();
    for sc in &scenarios {
        if sc.experiment != ExperimentKind::HarnackVerify {
            continue;
        }
        for s in &sc.statements {
            if let Some(id @ (StatementId::LogFitted | StatementId::LogShortTime)) = StatementId::parse(s) {
                jobs.push((sc, id));
            }
        }
    }
    if jobs.is_empty() {
        return Err(LabError::Config("no scenario has a fitted log statement".into()));
    }
    let pool = pool(opts.jobs)?;
    pool.install(|| {
        jobs.par_iter()
            .map(|(sc, id)| {
                let fail = |e: harnack_core::Error| LabError::Scenario { scenario: sc.name.clone(), message: e.to_string() };
                let problem = experiments::build_problem(sc).map_err(fail)?;
                let delta = experiments::fitted_delta(sc, &problem).map_err(fail)?;
                let mut sweep = experiments::cases(sc).map_err(fail)?;
                sweep.retain(|i| i.x != i.y);
                let cfg = experiments::mc_config(sc);
                let fit = fit_empirical_constant(*id, &problem, delta, &sweep, &cfg, true).map_err(fail)?;
                Ok(ConstantFit { scenario: sc.name.clone(), fit })
            })
            .collect()
    })
}
