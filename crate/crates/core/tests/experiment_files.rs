use std::fs;

use lrb_core::config::{bundled, ExperimentConfig};
use lrb_core::experiment::run_experiment;
use lrb_core::{LrbError, Propagation};

const SMALL: &str = "
name = tiny
beta = 0.9
grid_delta = 0.05
sessions = 40
runs = 8
seed = 5
mwi_horizon = 30
etas = 0.3, 0.6
trace_runs = 1
post_feedback_propagation = k_step

[arm]
p00 = 0.8
p10 = 0.3
rho0 = 0
rho1 = 1
r0 = 0.2
r1 = 0.9
k = 4

[arm]
p00 = 0.4
p10 = 0.7
rho0 = 0.1
rho1 = 0.8
r0 = 0.1
r1 = 0.7
k = 2
post_feedback_propagation = one_step
";

fn errors(text: &str) -> Vec<String> {
    match text.parse::<ExperimentConfig>() {
        Err(LrbError::Config(e)) => e,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn loads_from_disk_with_per_arm_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.cfg");
    fs::write(&path, SMALL).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.arms[0].propagation, Propagation::KStep);
    assert_eq!(cfg.arms[1].propagation, Propagation::OneStep);
    assert_eq!(cfg.etas, vec![0.3, 0.6]);
    let missing = ExperimentConfig::load(&dir.path().join("absent.cfg")).unwrap_err();
    assert!(missing.to_string().contains("absent.cfg"));
}

#[test]
fn malformed_probability_names_the_field() {
    let errs = errors(&SMALL.replace("p00 = 0.8", "p00 = 1.2"));
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].contains("arm 1") && errs[0].contains("p00"), "{errs:?}");
}

#[test]
fn estimate_must_be_positive() {
    let errs = errors(&SMALL.replace("k = 2", "k = 2\nk_e = 0"));
    assert!(errs.iter().any(|e| e.contains("k_e")), "{errs:?}");
}

#[test]
fn inaccurate_estimate_only_changes_the_decision_model() {
    let cfg: ExperimentConfig = bundled::EXAMPLE4.parse().unwrap();
    let truth: Vec<u32> = cfg.arms.iter().map(|a| a.k).collect();
    assert!(truth.iter().any(|&k| k != 3));
    assert!(cfg.decision_arms().iter().all(|a| a.k == 3));
    let sim = cfg.sim_config();
    assert_eq!(sim.arms.iter().map(|a| a.k).collect::<Vec<_>>(), truth);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let cfg: ExperimentConfig = SMALL.parse().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    assert!(ra.files.len() > 10);
    for f in &ra.files {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("policy,final_value,stderr\n"));
    assert_eq!(summary.lines().count(), 7);
    assert!(!summary.contains('\r'));
}
