use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harnack-lab"))
}

fn scenarios(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn temp_dir(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("harnack-lab-{label}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    exe().args(args).arg("--out-dir").arg(out).output().expect("run harnack-lab")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Compares with the stored file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(produced: &Path, name: &str) {
    let got = fs::read_to_string(produced).unwrap();
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &got).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(got, want, "{name} differs from its golden file");
}

#[test]
fn heat_scenario_holds_and_matches_golden() {
    let out = temp_dir("heat");
    let o = run(&["run", scenarios("heat_log_harnack.toml").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("heat-log-harnack.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "statement,x,y,s,t,f,p,lhs_mean,lhs_lo,lhs_hi,rhs_mean,rhs_lo,rhs_hi,verdict");
    assert!(lines.clone().count() == 8 && lines.all(|l| l.ends_with(",HOLDS")));
    assert!(out.join("heat-log-harnack.gp").exists());
    check_golden(&out.join("heat-log-harnack.json"), "heat-log-harnack.json");
    check_golden(&out.join("heat-log-harnack.csv"), "heat-log-harnack.csv");
}

#[test]
fn condition_check_matches_golden() {
    let out = temp_dir("cond");
    let o = run(&["--config", scenarios("conditions.toml").to_str().unwrap(), "run"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("footnote-matrix.json")).unwrap()).unwrap();
    let p = &v["result"]["points"][0];
    assert_eq!(p["violated"], true);
    assert_eq!(p["surrogate_violated"], false);
    check_golden(&out.join("footnote-matrix.json"), "footnote-matrix.json");
}

#[test]
fn runs_are_deterministic() {
    let a = temp_dir("det-a");
    let b = temp_dir("det-b");
    let cfg = scenarios("heat_log_harnack.toml");
    assert!(run(&["run", cfg.to_str().unwrap(), "--jobs", "2"], &a).status.success());
    assert!(exe().args(["run", cfg.to_str().unwrap(), "--out-dir"]).arg(&b).env("HARNACK_LAB_JOBS", "1").output().unwrap().status.success());
    for f in ["heat-log-harnack.json", "heat-log-harnack.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

/// Drops the fields that carry Monte Carlo noise or the seed.
fn strip_noise(v: &mut Value) {
    match v {
        Value::Object(m) => {
            for k in ["seed", "lhs", "rhs", "verdicts", "verdict"] {
                m.remove(k);
            }
            m.values_mut().for_each(strip_noise);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_noise),
        _ => {}
    }
}

#[test]
fn seed_override_changes_only_noise() {
    let a = temp_dir("seed-a");
    let b = temp_dir("seed-b");
    let cfg = scenarios("heat_log_harnack.toml");
    assert!(run(&["run", cfg.to_str().unwrap()], &a).status.success());
    assert!(run(&["run", cfg.to_str().unwrap(), "--seed", "7"], &b).status.success());
    let read = |d: &Path| -> Value { serde_json::from_str(&fs::read_to_string(d.join("heat-log-harnack.json")).unwrap()).unwrap() };
    let (mut va, mut vb) = (read(&a), read(&b));
    assert_eq!(vb["seed"], 7);
    assert_ne!(va["rows"][0]["lhs"], vb["rows"][0]["lhs"]);
    strip_noise(&mut va);
    strip_noise(&mut vb);
    assert_eq!(va, vb);
}

#[test]
fn empty_file_exits_2() {
    let dir = temp_dir("empty");
    let cfg = dir.join("empty.toml");
    fs::write(&cfg, "# nothing here\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no scenarios"));
}

#[test]
fn parse_error_exits_2_with_position() {
    let dir = temp_dir("parse");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "[[scenario]]\nname = \"a\"\nexperiment = \"nope\"\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:3:14"), "{}", stderr(&o));
}

#[test]
fn runtime_error_exits_1_with_scenario_name() {
    let dir = temp_dir("runtime");
    let cfg = dir.join("bad.toml");
    fs::write(
        &cfg,
        "[[scenario]]\nname = \"broken-drift\"\nexperiment = \"coupling\"\ndrift = { preset = \"no-such-drift\" }\n",
    )
    .unwrap();
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken-drift"), "{}", stderr(&o));
}

#[test]
fn list_presets_is_stable_and_machine_readable() {
    let a = exe().arg("list-presets").output().unwrap();
    let b = exe().arg("list-presets").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in ["identity", "ou-drift", "holder-bump", "footnote-matrix"] {
        assert!(text.contains(name), "{name}");
    }
    let j = exe().args(["list-presets", "--json"]).output().unwrap();
    let v: Value = serde_json::from_slice(&j.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|p| p["name"] == "footnote-matrix" && p["kind"] == "diffusion"));
}

#[test]
fn version_prints_package_version() {
    let o = exe().arg("version").output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), format!("harnack-lab {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn fit_constant_reports_a_stable_fit() {
    let dir = temp_dir("fit");
    let o = run(&["fit-constant", "--json", scenarios("heat_constant_fit.toml").to_str().unwrap()], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let fit = &v[0]["fit"];
    let c = fit["c_emp"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&c), "{c}");
    assert_eq!(fit["stable"], true);
    assert_eq!(fit["instances"].as_array().unwrap().len(), 20);
}

#[test]
fn json_summary_lists_written_files() {
    let dir = temp_dir("summary");
    let o = run(&["run", "--json", scenarios("conditions.toml").to_str().unwrap()], &dir);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(v[0]["files"]["json"].as_str().unwrap().ends_with("footnote-matrix.json"));
}

#[test]
fn violated_verdict_exits_1() {
    let dir = temp_dir("violated");
    let cfg = dir.join("tiny-constant.toml");
    fs::write(
        &cfg,
        "[[scenario]]\nname = \"tiny-constant\"\nexperiment = \"harnack-verify\"\n\
         statements = [\"log-harnack-fitted\"]\nconstants = { c = 0.01, delta = 1.0 }\nn_paths = 20000\ndt = 1.0\n\
         [[scenario.instance]]\nx = [0.0]\ny = [2.0]\nt = 1.0\nf = { preset = \"exp-tilt\", params = { lambda = 2.0 } }\n",
    )
    .unwrap();
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(fs::read_to_string(dir.join("tiny-constant.csv")).unwrap().contains(",VIOLATED"));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let s = harnack_lab::load_scenarios(&path).unwrap_or_else(|e| panic!("{e}"));
            assert!(!s.is_empty());
            n += 1;
        }
    }
    assert!(n >= 6);
}
