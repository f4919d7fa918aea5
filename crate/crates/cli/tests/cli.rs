use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vir_lab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vir-lab"));
    cmd.args(args).env_remove("VIR_LAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("VIR_LAB_OUT", dir);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path, experiment: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{experiment}.report.json"))).unwrap()).unwrap()
}

const SMALL_VIR: &str = r#"{"experiment": "vir-check", "seed": 42, "payload": {"n": 256, "trials": 8}}"#;

#[test]
fn list_shows_eight_experiments() {
    let out = vir_lab(&["list", "--json"], None);
    assert!(out.status.success());
    let catalog: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(catalog.len(), 8);
    assert!(catalog.iter().all(|e| e["defaults"].is_object() && e["fields"].is_array()));
    let text = String::from_utf8(vir_lab(&["list"], None).stdout).unwrap();
    for name in ["vir-check", "ch-evolve", "hopf-oracle", "mv-run", "mv-limit", "hs-step", "hs-simple", "invariance-check"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn validate_accepts_defaults_and_explains_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", r#"{"experiment": "hs-step"}"#);
    let out = vir_lab(&["validate", &ok], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok: hs-step"));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"experiment": "ch-evolve", "payload": {"dt": -0.1, "stepz": 3}}"#,
    );
    let out = vir_lab(&["validate", &bad], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid descriptor") && err.contains("stepz"), "{err}");

    let out = vir_lab(&["run", &bad], None);
    assert_eq!(out.status.code(), Some(1));
    let missing = dir.path().join("nope.json");
    assert_eq!(vir_lab(&["run", missing.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn run_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.json", SMALL_VIR);
    let out_dir = dir.path().join("out");
    let out = vir_lab(&["run", &d, "--out", out_dir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("vir-check.csv")).unwrap();
    assert!(csv.starts_with("trial,associativity_f,associativity_F,cocycle_identity"));
    assert_eq!(csv.lines().count(), 9);
    let r = report(&out_dir, "vir-check");
    assert_eq!(r["seed"], 42);
    assert_eq!(r["passed"], true);
    assert_eq!(r["descriptor"]["experiment"], "vir-check");
    assert!(r["summary"]["max_cocycle_identity"].as_f64().unwrap() < 1e-6);
}

#[test]
fn seed_flag_overrides_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.json", SMALL_VIR);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    vir_lab(&["run", &d, "--out", a.to_str().unwrap()], None);
    vir_lab(&["run", &d, "--seed", "7", "--out", b.to_str().unwrap()], None);
    assert_eq!(report(&b, "vir-check")["seed"], 7);
    assert_ne!(
        fs::read(a.join("vir-check.csv")).unwrap(),
        fs::read(b.join("vir-check.csv")).unwrap()
    );
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let in_desc = dir.path().join("descriptor-dir");
    let text = format!(
        r#"{{"experiment": "mv-limit", "payload": {{"eps": [0.1, 0.05]}}, "output_dir": {}}}"#,
        serde_json::to_string(in_desc.to_str().unwrap()).unwrap()
    );
    let d = write(dir.path(), "d.json", &text);
    assert!(vir_lab(&["run", &d], None).status.success());
    assert!(in_desc.join("mv-limit.csv").exists());

    let env_dir = dir.path().join("env-dir");
    assert!(vir_lab(&["run", &d], Some(&env_dir)).status.success());
    assert!(env_dir.join("mv-limit.csv").exists());

    let flag_dir = dir.path().join("flag-dir");
    assert!(vir_lab(&["run", &d, "--out", flag_dir.to_str().unwrap()], Some(&env_dir)).status.success());
    assert!(flag_dir.join("mv-limit.csv").exists());
}

#[test]
fn failed_invariant_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // the square density is not inverse-invariant, but invariance is expected by default
    let d = write(
        dir.path(),
        "d.json",
        r#"{"experiment": "invariance-check", "payload": {"density": "square", "n": 64, "trials": 5}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = vir_lab(&["run", &d, "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL matches_expectation"));
    assert_eq!(report(&out_dir, "invariance-check")["passed"], false);
}

#[test]
fn module_errors_exit_one_with_context() {
    let dir = tempfile::tempdir().unwrap();
    // alpha = 0 leaves the mean unconstrained, so the field must have none
    let d = write(
        dir.path(),
        "d.json",
        r#"{"experiment": "ch-evolve", "payload": {"params": {"alpha": 0, "beta": 1, "b": 0}, "v0": {"n": 64, "mean": 0.3, "sin": [[1, 0.1]]}}}"#,
    );
    let out = vir_lab(&["run", &d, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ch-evolve:"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(
        dir.path(),
        "d.json",
        r#"{"experiment": "hs-simple", "seed": 3, "payload": {"omega0": {"n": 64, "random": {"modes": 4, "amplitude": 0.2}}, "stationarity_directions": 3, "root_find_trials": 4}}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    vir_lab(&["run", &d, "--out", a.to_str().unwrap()], None);
    vir_lab(&["run", &d, "--out", b.to_str().unwrap()], None);
    let ca = fs::read(a.join("hs-simple.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, fs::read(b.join("hs-simple.csv")).unwrap());
}
