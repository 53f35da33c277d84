use std::fs;

use percodyn_core::experiments::{run_experiment, ExperimentConfig, Recipe};
use percodyn_core::Error;

fn small_flip_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("flip-identity").unwrap();
    if let Recipe::FlipIdentity(p) = &mut cfg.recipe {
        p.replicas = 300;
    }
    cfg
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small_flip_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn different_seed_changes_the_report() {
    let cfg = small_flip_config();
    let other = ExperimentConfig { seed: cfg.seed + 1, ..cfg.clone() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&other, b.path()).unwrap();
    let file = "flip-identity-comparison.csv";
    assert_ne!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    fs::write(&path, r#"{"experiment": "oracle-suite", "trees": 4, "seed": 3}"#).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    let report = run_experiment(&cfg, &dir.path().join("out")).unwrap();
    assert!(report.passed);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/oracle-suite.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["trees"], 4);
    assert_eq!(json["config"]["seed"], 3);
    let csv = fs::read_to_string(dir.path().join("out/oracle-suite-comparisons.csv")).unwrap();
    assert!(csv.starts_with("tree,quantity,exact,brute,abs_delta\n"));
}

#[test]
fn unknown_experiment_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    fs::write(&path, r#"{"experiment": "lattice-magic"}"#).unwrap();
    assert!(matches!(ExperimentConfig::load(&path), Err(Error::UnknownExperiment(_))));
}
