use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sigma_eigen::cli::{run, EXIT_REGRESSION, VERSION_TAG};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigma-eigen")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(std::iter::once("sigma-eigen").chain(args.iter().copied()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn lambdas(v: &Value) -> Vec<f64> {
    v["eigenpairs"].as_array().unwrap().iter().map(|p| p["lambda"].as_f64().unwrap()).collect()
}

#[test]
fn profile_reports_closed_form_parameters() {
    let out = bin(&["profile", "--n", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("b=2.0000000000") && text.contains("c=1.0000000000"), "{text}");

    let out = bin(&["profile", "--n", "0", "--check-closed-form"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn first_excitation_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f1.json");
    assert_eq!(code(&["profile", "--n", "1", "--out", path.to_str().unwrap()]), 0);
    let v = json(&path);
    assert_eq!(v["version"], VERSION_TAG);
    assert_eq!(v["config"]["n"], 1);
    assert!(v["defect"].as_f64().unwrap() <= 1e-8);
    assert!((v["b"].as_f64().unwrap() - 21.7574).abs() < 1e-3);
}

#[test]
fn modes_on_requested_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = out.to_str().unwrap();

    assert_eq!(code(&["modes", "--n", "0", "--lambda-range", "-1,2", "--out", o]), 0);
    let mut l = lambdas(&json(&out));
    l.sort_by(f64::total_cmp);
    assert_eq!(l.len(), 2, "{l:?}");
    assert!((l[0] + 0.54246).abs() <= 5e-5 && (l[1] - 1.0).abs() <= 1e-6);

    assert_eq!(code(&["modes", "--n", "1", "--lambda-range", "5,7", "--out", o]), 0);
    let l = lambdas(&json(&out));
    assert_eq!(l.len(), 1);
    assert!((l[0] - 6.333625).abs() <= 1e-4);

    assert_eq!(code(&["modes", "--n", "0", "--lambda-range", "2,5", "--out", o]), 0);
    assert!(lambdas(&json(&out)).is_empty());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("same.json");
    let o = out.to_str().unwrap();
    let mut runs = Vec::new();
    for extra in [&[][..], &["--sequential"][..]] {
        let mut args = vec!["modes", "--n", "1", "--lambda-range", "-1,7", "--out", o];
        args.extend_from_slice(extra);
        assert_eq!(code(&args), 0);
        let mut v = json(&out);
        v["config"]["exec"] = Value::Null;
        runs.push(fs::read(&out).unwrap());
        runs.push(serde_json::to_vec(&v).unwrap());
    }
    assert_eq!(code(&["modes", "--n", "1", "--lambda-range", "-1,7", "--out", o]), 0);
    assert_eq!(fs::read(&out).unwrap(), runs[0]);
    // execution policy changes nothing but its own config field
    assert_eq!(runs[1], runs[3]);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("s.json");
    fs::write(&cfg, r#"{"grid": 64, "tau_end": 8, "levels": 3, "window": {"kind": "fixed", "start": 4, "end": 8}}"#).unwrap();
    let c = code(&[
        "--config",
        cfg.to_str().unwrap(),
        "spectrum",
        "--levels",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(c, 0);
    let v = json(&out);
    assert_eq!(v["config"]["grid"], 64);
    assert_eq!(v["config"]["levels"], 1);
    assert_eq!(v["config"]["command"], "spectrum");
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 1);
    assert!((levels[0]["mu"].as_f64().unwrap() - 1.0).abs() < 0.02);
    let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("tau,log_norm_level_0\n"));

    fs::write(&cfg, r#"{"grid": 64, "bogus": 1}"#).unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "profile"]), 2);
    assert_eq!(code(&["--config", dir.path().join("missing.json").to_str().unwrap(), "profile"]), 2);
}

#[test]
fn snapshots_are_written_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.csv");
    let args = ["spectrum", "--grid", "32", "--tau-end", "8", "--levels", "2", "--snapshots", snap.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    for j in 0..2 {
        let text = fs::read_to_string(dir.path().join(format!("snap.level{j}.csv"))).unwrap();
        assert!(text.starts_with("tau,rho,u1,u2,u3\n"));
        assert_eq!(text.lines().count(), 32 + 2 + 1);
    }
}

#[test]
fn single_cell_and_unknown_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cell.json");
    let c = code(&["reproduce-tables", "--cell", "groundstate/shooting/gauge", "--out", out.to_str().unwrap()]);
    assert_eq!(c, 0);
    let v = json(&out);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    assert!((cells[0]["computed"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(code(&["reproduce-tables", "--cell", "groundstate/shooting/nope"]), 2);
}

#[test]
fn coarse_tables_run_to_completion() {
    let out = bin(&["reproduce-tables", "--grid", "64"]);
    let c = out.status.code().unwrap();
    assert!(c == 0 || c == EXIT_REGRESSION, "exit {c}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("populated cells pass"));
    assert_eq!(text.matches("skipped").count(), 3);
}

#[test]
fn convergence_command() {
    assert_eq!(code(&["converge", "--grids", "64,128,256"]), 0);
    assert_eq!(code(&["converge", "--grids", "64,100,200"]), 2);
}

#[test]
fn validation_failures_exit_2() {
    for args in [
        &["spectrum", "--cfl", "0.9"][..],
        &["profile", "--n", "9"],
        &["profile", "--grid", "8"],
        &["modes", "--lambda-range", "3,1"],
        &["spectrum", "--levels", "0"],
        &["profile", "--n", "1", "--check-closed-form"],
        &["nonsense"],
        &["modes", "--lambda-range", "1"],
    ] {
        assert_eq!(code(args), 2, "{args:?}");
    }
    assert_eq!(code(&["--help"]), 0);
}
