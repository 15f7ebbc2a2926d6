//! CSV contracts of the experiment commands on small configurations.

use std::fs;
use std::path::Path;

use dtsync::config::ExperimentConfig;
use dtsync::experiment::{
    cmd_deploy, cmd_experiment, cmd_simulate, cmd_solve, simulate_header, FigureId, BREAKDOWN_HEADER,
    DEPLOY_COMPARE_HEADER,
};
use dtsync::export::CsvTable;
use dtsync::sched_mdp::{average_cost_of, policy_from_csv, relative_policy_iteration, MdpSpec};

fn small(extra: &[&str]) -> ExperimentConfig {
    let mut overrides: Vec<String> = [
        "mdp.aoci_cap=20",
        "mdp.aoi_cap=20",
        "simulation.runs=20",
        "simulation.horizon=200",
        "learner.iterations=200",
        "learner.actor_hidden=[16]",
        "learner.critic_hidden=[16]",
        "deploy.eval_seeds=3",
        "deploy.random_draws=3",
        "sweep.num_devices=[6]",
        "sweep.num_bs=[3]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    overrides.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::from_toml_with("", &overrides).unwrap()
}

fn read(path: &Path) -> CsvTable {
    CsvTable::read(path).unwrap()
}

fn assert_provenance(t: &CsvTable, seed: u64) {
    let first = &t.comments[0];
    assert!(first.contains("config_hash=") && first.contains("version="), "{first}");
    assert_eq!(t.comment_value("seed"), Some(seed.to_string()));
}

#[test]
fn solve_exports_round_trip_and_self_consistent_gain() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(&["mdp.aoci_cap=8", "mdp.aoi_cap=8"]);
    let files = cmd_solve(&config, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let spec: MdpSpec = config.mdp_spec();
    let policy_csv = read(&dir.path().join("solve/policy.csv"));
    assert_provenance(&policy_csv, config.seed);
    assert_eq!(policy_csv.header, ["delta", "aoci", "action"]);
    let imported = policy_from_csv(&policy_csv, &spec).unwrap();
    let direct = relative_policy_iteration(&spec).unwrap();
    assert_eq!(imported, direct.policy);
    let solve_csv = read(&dir.path().join("solve/solve.csv"));
    assert_eq!(solve_csv.header, ["delta", "aoci", "bias"]);
    let gain: f64 = solve_csv.comment_value("gain").unwrap().parse().unwrap();
    assert!((gain - average_cost_of(&imported, &spec).unwrap()).abs() < 1e-9);
    assert_eq!(solve_csv.rows.len(), spec.num_states());
}

#[test]
fn simulate_emits_one_row_per_policy_and_point_and_is_reproducible() {
    let config = small(&["simulation.write_trace=true"]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_simulate(&config, a.path()).unwrap();
    cmd_simulate(&config, b.path()).unwrap();
    for name in ["simulate/metrics.csv", "simulate/trace.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let metrics = read(&a.path().join("simulate/metrics.csv"));
    assert_provenance(&metrics, config.seed);
    assert_eq!(metrics.header, simulate_header());
    assert_eq!(metrics.rows.len(), 4 * config.sweep.q.len());
    let policy = metrics.column("policy").unwrap();
    let names: Vec<&str> = metrics.rows.iter().take(4).map(|r| r[policy].as_str()).collect();
    assert_eq!(names, ["ZW", "SAC", "threshold", "solved"]);
    let trace = read(&a.path().join("simulate/trace.csv"));
    assert_eq!(trace.header, ["t", "a", "d", "c", "delta", "aoci"]);
    assert_eq!(trace.rows.len(), config.simulation.horizon as usize);
}

#[test]
fn different_seeds_change_the_simulation() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_simulate(&small(&["sweep.q=[0.3]"]), a.path()).unwrap();
    cmd_simulate(&small(&["sweep.q=[0.3]", "seed=2"]), b.path()).unwrap();
    let ta = read(&a.path().join("simulate/metrics.csv"));
    let tb = read(&b.path().join("simulate/metrics.csv"));
    assert_ne!(ta.rows, tb.rows);
}

#[test]
fn deploy_gap_column_present_iff_oracle_runs() {
    let within = tempfile::tempdir().unwrap();
    let config = small(&["topology.num_devices=5", "topology.num_bs=3"]);
    cmd_deploy(&config, within.path()).unwrap();
    let curve = read(&within.path().join("deploy/cost_curve.csv"));
    assert_eq!(curve.header, ["iteration", "deployment_cost"]);
    assert_eq!(curve.rows.len(), config.learner.iterations);
    let cmp = read(&within.path().join("deploy/comparison.csv"));
    assert!(cmp.column("oracle_gap").is_ok());
    assert_eq!(cmp.rows.len(), 4);
    let sol = read(&within.path().join("deploy/solution.csv"));
    assert_eq!(sol.header, ["device", "host_bs"]);
    assert_eq!(sol.rows.len(), 5);

    let beyond = tempfile::tempdir().unwrap();
    cmd_deploy(&small(&["topology.num_devices=12", "topology.num_bs=5"]), beyond.path()).unwrap();
    let cmp = read(&beyond.path().join("deploy/comparison.csv"));
    assert!(cmp.column("oracle_gap").is_err());
    assert_eq!(cmp.rows.len(), 3);
}

#[test]
fn figure_bundles_have_documented_columns_and_rerun_identically() {
    let config = small(&["sweep.q=[0.2, 0.6, 1.0]"]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for fig in FigureId::ALL {
        let fa = cmd_experiment(&config, fig, a.path()).unwrap();
        let fb = cmd_experiment(&config, fig, b.path()).unwrap();
        assert!(!fa.is_empty());
        for (pa, pb) in fa.iter().zip(&fb) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{fig}: {}", pa.display());
        }
    }
    let conv = read(&a.path().join("fig-convergence/cost_curve_K6_B3.csv"));
    assert_eq!(conv.rows.len(), config.learner.iterations);
    let cmp = read(&a.path().join("fig-deploy-compare/deploy_compare.csv"));
    assert_eq!(cmp.header, DEPLOY_COMPARE_HEADER);
    assert_eq!(cmp.rows.len(), 3);
    let total = read(&a.path().join("fig-total-cost/total_cost.csv"));
    assert_eq!(total.rows.len(), 12);
    let breakdown = read(&a.path().join("fig-breakdown/breakdown.csv"));
    assert_eq!(breakdown.header, BREAKDOWN_HEADER);
    let (ca, cu, ct) = (
        breakdown.column("avg_aoci").unwrap(),
        breakdown.column("avg_update_cost").unwrap(),
        breakdown.column("total_cost").unwrap(),
    );
    for row in &breakdown.rows {
        let f = |c: usize| row[c].parse::<f64>().unwrap();
        assert!((f(ca) + f(cu) - f(ct)).abs() <= 1e-9);
    }
}

#[test]
fn invalid_config_stops_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(&[]);
    config.chain.q = 1.5;
    let err = cmd_solve(&config, dir.path()).unwrap_err();
    assert!(err.to_string().contains("chain.q"), "{err}");
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}
