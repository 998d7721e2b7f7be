use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harnack_core::presets::PRESETS;
use harnack_lab::{fit_constants, load_scenarios, run_all, LabError, RunOptions};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "harnack-lab", about = "Monte Carlo and PDE experiments on Harnack inequalities for SDEs")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Replace every scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for running scenarios.
    #[arg(long, global = true, env = "HARNACK_LAB_JOBS")]
    jobs: Option<usize>,

    /// Directory for reports.
    #[arg(long, global = true, default_value = "harnack-out")]
    out_dir: PathBuf,

    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every scenario of a file and write its reports
    Run {
        /// Scenario file; same as --config.
        file: Option<PathBuf>,
    },
    /// List drift, diffusion and test-function presets with their parameters
    ListPresets,
    /// Fit the constant of the fitted log statements, with a doubled-path stability check
    FitConstant {
        file: Option<PathBuf>,
    },
    /// Print the version
    Version,
}

fn config_path(cli: &Cli, file: &Option<PathBuf>) -> Result<PathBuf, LabError> {
    file.clone().or_else(|| cli.config.clone()).ok_or_else(|| LabError::Config("no scenario file given (use --config or a path)".into()))
}

fn options(cli: &Cli) -> RunOptions {
    RunOptions { out_dir: cli.out_dir.clone(), jobs: cli.jobs, seed: cli.seed }
}

fn list_presets(json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(PRESETS).expect("presets serialize"));
        return;
    }
    for p in PRESETS {
        let kind = serde_json::to_value(p.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let params: Vec<String> = p.params.iter().map(|s| format!("{}={:?}", s.name, s.default)).collect();
        println!("{kind:<14} {:<16} {:<40} {}", p.name, params.join(" "), p.description);
    }
}

fn run(cli: &Cli, file: &Option<PathBuf>) -> Result<ExitCode, LabError> {
    let scenarios = load_scenarios(&config_path(cli, file)?)?;
    let results = run_all(&scenarios, &options(cli))?;
    let mut failed = false;
    let mut summary = Vec::new();
    for (sc, r) in scenarios.iter().zip(results) {
        match r {
            Ok((report, written)) => {
                failed |= report.violated() > 0;
                if cli.json {
                    summary.push(json!({ "name": report.name, "experiment": report.experiment, "verdicts": report.verdicts, "files": written }));
                } else {
                    let counts: Vec<String> = report.verdicts.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    println!("{:<32} {:<24} {:<40} {}", report.name, report.experiment, counts.join(" "), written.json.display());
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {e}");
                if cli.json {
                    summary.push(json!({ "name": sc.name, "experiment": sc.experiment.as_str(), "error": e.to_string() }));
                }
            }
        }
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn fit(cli: &Cli, file: &Option<PathBuf>) -> Result<ExitCode, LabError> {
    let scenarios = load_scenarios(&config_path(cli, file)?)?;
    let fits = fit_constants(&scenarios, &options(cli))?;
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&fits).expect("fits serialize"));
    } else {
        for f in &fits {
            println!(
                "{:<32} {:<24} C_emp = {:.6}  (2N: {})  instances = {}",
                f.scenario,
                f.fit.statement.as_str(),
                f.fit.c_emp,
                match (f.fit.c_emp_doubled, f.fit.stable) {
                    (Some(c), Some(s)) => format!("{c:.6}, {}", if s { "stable" } else { "UNSTABLE" }),
                    _ => "-".into(),
                },
                f.fit.instances.len()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { file } => run(&cli, file),
        Command::FitConstant { file } => fit(&cli, file),
        Command::ListPresets => {
            list_presets(cli.json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Version => {
            println!("harnack-lab {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code())
    })
}
