use std::path::{Path, PathBuf};

use elastic_mkv::experiments::{
    read_loss_csv, run_experiment, ExperimentConfig, ExperimentKind, RunManifest, MANIFEST_NAME, SCHEMA_VERSION,
};
use elastic_mkv::Error;
use sha2::{Digest, Sha256};

fn shipped(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn shipped_names() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    names
}

fn check_bool(m: &RunManifest, name: &str) -> bool {
    m.checks[name].as_bool().unwrap_or_else(|| panic!("{name} is not a bool"))
}

#[test]
fn shipped_configs_validate() {
    let names = shipped_names();
    assert_eq!(names.len(), 5);
    for n in &names {
        let cfg = shipped(n);
        cfg.validate().unwrap();
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        assert_eq!(format!("{}.json", cfg.kind.name()), *n);
    }
}

#[test]
fn kappa_sweep_ordering_holds() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&shipped("kappa_sweep.json"), dir.path()).unwrap();
    assert!(m.valid);
    assert!(check_bool(&m, "monotone_in_kappa"));
    assert!(check_bool(&m, "bounded_by_absorbing"));

    // reread the curves and check the ordering from disk
    let ExperimentKind::KappaSweep { kappas, .. } = &m.config.kind else { unreachable!() };
    let mut finals = Vec::new();
    for f in m.files.iter().filter(|f| f.path.starts_with("loss_kappa_") && f.path != "loss_kappa_inf.csv") {
        let (_, v) = read_loss_csv(&dir.path().join(&f.path)).unwrap();
        finals.push(*v.last().unwrap());
    }
    assert_eq!(finals.len(), kappas.len());
    let (_, inf) = read_loss_csv(&dir.path().join("loss_kappa_inf.csv")).unwrap();
    assert!(finals.iter().all(|&f| f <= *inf.last().unwrap()));
}

#[test]
fn n_sweep_distances_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&shipped("n_sweep.json"), dir.path()).unwrap();
    assert!(check_bool(&m, "levy_decreasing_in_n"));
    let mut r = csv::Reader::from_path(dir.path().join("distances.csv")).unwrap();
    let levy: Vec<f64> = r.records().map(|rec| rec.unwrap()[2].parse().unwrap()).collect();
    assert!(!levy.is_empty());
    assert!(levy.windows(2).all(|w| w[1] <= w[0]), "{levy:?}");
}

#[test]
fn blowup_demo_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&shipped("blowup_demo.json"), dir.path()).unwrap();
    assert!(m.flags.blowup_guaranteed);
    assert!(m.checks["max_jump"].as_f64().unwrap() >= 0.05);
    let jumps = std::fs::read_to_string(dir.path().join("jumps.csv")).unwrap();
    assert!(jumps.starts_with("t,size,param\n"));
    assert!(jumps.lines().count() > 1);
}

#[test]
fn rerun_gives_identical_digests() {
    let mut cfg = shipped("pde_compare.json");
    cfg.params.n_particles = 5000;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_experiment(&cfg, a.path()).unwrap();
    let mb = run_experiment(&cfg, b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.checks, mb.checks);
    assert!(ma.flags.mollification_width.is_some());
    for f in &ma.files {
        let bytes = std::fs::read(a.path().join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256);
    }
}

#[test]
fn manifest_roundtrips() {
    let mut cfg = shipped("picard_vs_particle.json");
    cfg.params.n_particles = 2000;
    if let ExperimentKind::PicardVsParticle { picard } = &mut cfg.kind {
        picard.mc_samples = 2000;
    }
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&cfg, dir.path()).unwrap();
    let back = RunManifest::load(&dir.path().join(MANIFEST_NAME)).unwrap();
    assert_eq!(back, m);
    assert!(check_bool(&m, "picard_iterates_increasing"));
    let mut paths: Vec<_> = m.files.iter().map(|f| f.path.clone()).collect();
    let sorted = {
        let mut s = paths.clone();
        s.sort();
        s
    };
    assert_eq!(paths, sorted);
    paths.dedup();
    assert_eq!(paths.len(), m.files.len());
}

#[test]
fn failed_run_writes_invalid_manifest() {
    let mut cfg = shipped("pde_compare.json");
    cfg.params.n_particles = 1000;
    // validates, but the model step is not a multiple of the PDE step
    cfg.params.grid = elastic_mkv::TimeGrid::new(1.0, 300).unwrap();
    if let ExperimentKind::PdeCompare { pde } = &mut cfg.kind {
        pde.dt = 1.0 / 400.0;
    }
    cfg.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::SubRun { .. }), "{err}");
    let m = RunManifest::load(&dir.path().join(MANIFEST_NAME)).unwrap();
    assert!(!m.valid);
    assert!(m.error.unwrap().contains("pde"));
    assert!(m.files.is_empty());
}

#[test]
fn rejects_bad_configs() {
    let base =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/kappa_sweep.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["schema_version"] = 2.into();
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));

    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["kappas"] = serde_json::json!([1.0, 0.5]);
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));

    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["kind"] = "unknown".into();
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
}
