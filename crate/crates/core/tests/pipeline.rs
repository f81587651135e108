use std::fs;

use scalespin::{run_experiment, Error, ExperimentConfig, Suite};

fn config_in(dir: &std::path::Path, suite: Suite) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::reference();
    cfg.run.suite = suite;
    cfg.run.output_dir = dir.to_string_lossy().into_owned();
    cfg
}

#[test]
fn estimates_suite_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let art = run_experiment(&config_in(tmp.path(), Suite::Estimates)).unwrap();
    assert!(art.passed(), "{:#?}", art.checks());
    for f in [
        "constants.csv",
        "bounds.csv",
        "series.csv",
        "checks.csv",
        "manifest.json",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["suite"], "estimates");
    let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(echoed, config_in(tmp.path(), Suite::Estimates));
    let constants = fs::read_to_string(tmp.path().join("constants.csv")).unwrap();
    let header = constants.lines().next().unwrap();
    assert!(constants
        .lines()
        .skip(1)
        .all(|l| l.split(',').count() == header.split(',').count()));
}

#[test]
fn starving_the_iteration_fails_loudly() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config_in(tmp.path(), Suite::Picard);
    cfg.run.tolerances.picard_max_iter = 2;
    let art = run_experiment(&cfg).unwrap();
    assert!(!art.passed());
    assert!(!art.check("picard_converged").unwrap().passed);
    let checks = fs::read_to_string(tmp.path().join("checks.csv")).unwrap();
    assert!(checks
        .lines()
        .any(|l| l.starts_with("picard,picard_converged,false")));
}

#[test]
fn invalid_configuration_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config_in(&tmp.path().join("never"), Suite::Full);
    cfg.dynamics.q = 2.0;
    cfg.scale.points = 3;
    match run_experiment(&cfg) {
        Err(Error::Validation(msgs)) => {
            assert!(msgs.iter().any(|m| m.contains("dynamics.q")));
            assert!(msgs.iter().any(|m| m.contains("scale.points")));
        }
        other => panic!("expected validation error, got {other:?}"),
    }
    assert!(!tmp.path().join("never").exists());
}

#[test]
fn seed_controls_the_sample() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run_experiment(&config_in(a.path(), Suite::Sample)).unwrap();
    run_experiment(&config_in(b.path(), Suite::Sample)).unwrap();
    let mut other = config_in(c.path(), Suite::Sample);
    other.configuration.seed = 7;
    run_experiment(&other).unwrap();
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("sites.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}
