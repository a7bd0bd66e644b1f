use std::path::Path;
use std::process::{Command, Output};

use elastic_mkv::experiments::{RunManifest, MANIFEST_NAME};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastic-mkv")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_shipped_config() {
    let out = cli(&["validate", "--config", &config("blowup_demo.json")]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: blowup_demo"));
}

#[test]
fn validate_reports_missing_file() {
    let out = cli(&["validate", "--config", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn oracles_prints_reference_values() {
    let out = cli(&["oracles"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.476843"));
    assert!(text.contains("0.317310"));
}

#[test]
fn run_writes_outputs_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("kappa_sweep.json")).unwrap()).unwrap();
    v["params"]["n_particles"] = 500.into();
    std::fs::write(&cfg_path, v.to_string()).unwrap();
    let out_dir = dir.path().join("out");

    let out = cli(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--threads",
        "2",
        "--seed",
        "17",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = RunManifest::load(&out_dir.join(MANIFEST_NAME)).unwrap();
    assert!(m.valid);
    assert_eq!(m.config.seed, 17);
    assert!(out_dir.join("loss_kappa_inf.csv").exists());
}

#[test]
fn run_rejects_zero_threads() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "run",
        "--config",
        &config("kappa_sweep.json"),
        "--output-dir",
        dir.path().to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert!(!out.status.success());
}
