use std::fs;
use std::process::Command;

fn dtsync() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dtsync"));
    c.env_remove("DTSYNC_OUTPUT_DIR");
    c
}

#[test]
fn solve_writes_into_the_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtsync()
        .args(["solve", "--set", "mdp.aoci_cap=6", "--set", "mdp.aoi_cap=6"])
        .env("DTSYNC_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("solve/policy.csv").exists());
    assert!(dir.path().join("solve/solve.csv").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "seed = 9\n[chain]\nq = 0.4\n[simulation]\nruns = 7\n").unwrap();
    let out = dtsync()
        .arg("validate-config")
        .arg("--config")
        .arg(&cfg)
        .args(["--set", "chain.q=0.6", "--seed", "11"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 11"), "{text}");
    assert!(text.contains("q = 0.6"), "{text}");
    assert!(text.contains("runs = 7"), "{text}");
}

#[test]
fn bad_values_and_unknown_keys_fail_with_a_named_parameter() {
    let out = dtsync().args(["validate-config", "--set", "delivery.p_tx=1.5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("delivery.p_tx"));

    let out = dtsync().args(["validate-config", "--set", "mdp.nonsense=1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));

    let out = dtsync().args(["experiment", "fig-unknown"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("figure-id"));
}

#[test]
fn missing_config_file_is_an_error() {
    let out = dtsync().args(["solve", "--config", "/nonexistent/exp.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/exp.toml"));
}

#[test]
fn experiment_bundle_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dtsync()
            .args(["experiment", "fig-total-cost", "--output-dir"])
            .arg(dir.path())
            .args(["--set", "mdp.aoci_cap=15", "--set", "mdp.aoi_cap=15"])
            .args(["--set", "simulation.runs=10", "--set", "simulation.horizon=100", "--set", "sweep.q=[0.3, 0.9]"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let rel = "fig-total-cost/total_cost.csv";
    assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap());
}
