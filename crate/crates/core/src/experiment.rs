//! CSV-producing runs behind the command-line subcommands.
//!
//! Every run is a pure function of the validated configuration: RNG streams
//! are derived from `config.seed`, so re-running gives byte-identical files.
//! Sweep points run concurrently; files are written atomically.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, SweepPoint};
use crate::deploy::{
    actor_critic_train, cost_curve_csv, deployment_objective, exhaustive_oracle, nearest_baseline, random_baseline,
    solution_csv, DeployEnv, DeployPolicy, DeploymentSolution, Dynamics, OracleLimits, RewardParams, TrainingReport,
};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable, Provenance};
use crate::net_model::{sample_scenario, RadioParams, Scenario, TopologyConfig};
use crate::sched_mdp::{
    average_cost_of, policy_table_csv, relative_policy_iteration_with, solve_result_csv, PolicyTable, RpiOptions,
};
use crate::simulator::{
    metrics_row, run_monte_carlo, run_replication, trace_csv, Metrics, SchedulePolicy, SimConfig, METRICS_HEADER,
};

/// Environment variable naming the output directory.
pub const OUTPUT_DIR_ENV: &str = "DTSYNC_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";

/// Policy names used in metrics files.
pub const SOLVED_NAME: &str = "solved";
pub const THRESHOLD_NAME: &str = "threshold";

/// Explicit flag, then the environment variable, then `results`.
pub fn output_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

fn provenance(config: &ExperimentConfig) -> Provenance {
    Provenance::new(&config.canonical_toml(), config.seed)
}

fn write(table: &CsvTable, path: PathBuf, written: &mut Vec<PathBuf>) -> Result<()> {
    table.write(&path)?;
    written.push(path);
    Ok(())
}

fn rpi_options(config: &ExperimentConfig) -> RpiOptions {
    RpiOptions {
        max_iterations: config.mdp.max_iterations,
        ..RpiOptions::default()
    }
}

/// Solves the configured MDP; writes `policy.csv` and `solve.csv`.
pub fn cmd_solve(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let spec = config.mdp_spec();
    let result = relative_policy_iteration_with(&spec, &rpi_options(config))?;
    let prov = provenance(config);
    let dir = out_dir.join("solve");
    let mut written = Vec::new();
    write(&policy_table_csv(&result.policy, &spec, &prov), dir.join("policy.csv"), &mut written)?;
    write(&solve_result_csv(&result, &spec, &prov), dir.join("solve.csv"), &mut written)?;
    Ok(written)
}

/// Simulated and analytic results of one policy at one sweep point.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub name: &'static str,
    pub sim: SimConfig,
    pub metrics: Metrics,
    /// Exact long-run cost from `(1, 1)`; `None` for the genie rule.
    pub analytic: Option<f64>,
}

/// ZW, SAC, the threshold rule read off the solved policy, and the solved
/// policy itself, at one sweep point.
pub fn run_schedule_point(config: &ExperimentConfig, point: &SweepPoint) -> Result<Vec<PolicyRun>> {
    let sim = config.sim_config_at(point);
    sim.validate()?;
    let spec = sim.mdp_spec();
    let solved = relative_policy_iteration_with(&spec, &rpi_options(config))?;
    let threshold = SchedulePolicy::thresholds_of(&solved.policy);
    let threshold_table = PolicyTable::from_thresholds(&spec, |d| solved.policy.threshold(d));
    let candidates: Vec<(&'static str, SchedulePolicy, Option<f64>)> = vec![
        (
            crate::simulator::ZW_NAME,
            SchedulePolicy::ZeroWait,
            Some(average_cost_of(&PolicyTable::zero_wait(&spec), &spec)?),
        ),
        (crate::simulator::SAC_NAME, SchedulePolicy::SampleAtChange, None),
        (THRESHOLD_NAME, threshold, Some(average_cost_of(&threshold_table, &spec)?)),
        (SOLVED_NAME, SchedulePolicy::Table(solved.policy.clone()), Some(solved.gain)),
    ];
    candidates
        .into_iter()
        .map(|(name, policy, analytic)| {
            Ok(PolicyRun {
                name,
                sim,
                metrics: run_monte_carlo(&policy, &sim)?,
                analytic,
            })
        })
        .collect()
}

/// Runs every sweep point concurrently, keeping sweep order.
pub fn run_schedule_sweep(config: &ExperimentConfig) -> Result<Vec<PolicyRun>> {
    config.validate()?;
    let per_point = config
        .sweep
        .schedule_points()
        .par_iter()
        .map(|p| run_schedule_point(config, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// Metrics header plus the exact long-run cost column.
pub fn simulate_header() -> Vec<&'static str> {
    let mut h = METRICS_HEADER.to_vec();
    h.push("analytic_total_cost");
    h
}

pub fn metrics_table(runs: &[PolicyRun], prov: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(prov, &simulate_header());
    for r in runs {
        let mut row = metrics_row(r.name, &r.sim, &r.metrics);
        row.push(r.analytic.map(fmt_f64).unwrap_or_default());
        t.push_row(row);
    }
    t
}

/// Writes `metrics.csv` over the sweep axes, plus `trace.csv` (first
/// replication of the solved policy at the base parameters) when enabled.
pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = run_schedule_sweep(config)?;
    let prov = provenance(config);
    let dir = out_dir.join("simulate");
    let mut written = Vec::new();
    write(&metrics_table(&runs, &prov), dir.join("metrics.csv"), &mut written)?;
    if config.simulation.write_trace {
        let sim = config.sim_config();
        let solved = relative_policy_iteration_with(&sim.mdp_spec(), &rpi_options(config))?;
        let rep = run_replication(&SchedulePolicy::Table(solved.policy), &sim, 0, true)?;
        let trace = rep.trace.expect("trace requested");
        write(&trace_csv(&trace, &prov), dir.join("trace.csv"), &mut written)?;
    }
    Ok(written)
}

/// Seed of the `index`-th evaluation instance.
pub fn eval_instance_seed(config: &ExperimentConfig, index: usize) -> u64 {
    config.seed.wrapping_add(index as u64)
}

/// Seed of the training instance for a network size; disjoint from the
/// evaluation seeds for any sane `eval_seeds`.
pub fn train_instance_seed(config: &ExperimentConfig, num_devices: usize, num_bs: usize) -> u64 {
    config
        .seed
        .wrapping_add(1_000_000 + 1000 * num_bs as u64 + num_devices as u64)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trains on `scenario` with the configured learner and reward.
pub fn train_deploy_policy(
    config: &ExperimentConfig,
    scenario: &Scenario,
    topo_config: &TopologyConfig,
    dynamics: Dynamics,
    rng_seed: u64,
) -> Result<(DeployPolicy, TrainingReport)> {
    let radio = config.radio.params()?;
    let reward = RewardParams::for_instance(
        config.deploy.latency_weight,
        config.deploy.per_dt_cost,
        &scenario.topo,
        &scenario.lat,
        &radio,
    )?;
    let mut env = DeployEnv::new(
        scenario.topo.clone(),
        scenario.lat.clone(),
        radio,
        topo_config.clone(),
        dynamics,
        reward,
    )?;
    let mut rng = stream_rng(rng_seed, 1);
    actor_critic_train(&mut env, &config.learner, &mut rng)
}

/// Objectives of every method on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceComparison {
    pub proposed: f64,
    pub nearest: f64,
    /// Mean over the configured number of random draws.
    pub random_mean: f64,
    /// Present iff the instance is within the oracle limits.
    pub oracle: Option<f64>,
    pub proposed_solution: DeploymentSolution,
    pub proposed_hosts: usize,
    pub nearest_hosts: usize,
}

pub fn compare_on_instance(
    policy: &DeployPolicy,
    scenario: &Scenario,
    radio: &RadioParams,
    random_draws: usize,
    random_seed: u64,
    limits: &OracleLimits,
) -> Result<InstanceComparison> {
    let (topo, lat) = (&scenario.topo, &scenario.lat);
    let proposed_solution = policy.greedy_solution(topo, lat, radio)?;
    let nearest = nearest_baseline(topo, lat, radio)?;
    let mut random_sum = 0.0;
    for draw in 0..random_draws {
        let mut rng = stream_rng(random_seed, draw as u64);
        let sol = random_baseline(topo, lat, radio, &mut rng)?;
        random_sum += deployment_objective(&sol, topo, lat, radio)?;
    }
    let oracle = if limits.admits(topo) {
        Some(exhaustive_oracle(topo, lat, radio, limits)?.objective)
    } else {
        None
    };
    Ok(InstanceComparison {
        proposed: deployment_objective(&proposed_solution, topo, lat, radio)?,
        nearest: deployment_objective(&nearest, topo, lat, radio)?,
        random_mean: random_sum / random_draws as f64,
        oracle,
        proposed_hosts: proposed_solution.num_hosts(),
        nearest_hosts: nearest.num_hosts(),
        proposed_solution,
    })
}

/// Trains on the configured instance; writes the cost curve, the greedy
/// solution and a per-method comparison on the same instance.
pub fn cmd_deploy(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let radio = config.radio.params()?;
    let scenario = sample_scenario(config.seed, &config.topology)?;
    let (policy, report) =
        train_deploy_policy(config, &scenario, &config.topology, config.deploy.dynamics, config.seed)?;
    let limits = OracleLimits::default();
    let cmp = compare_on_instance(&policy, &scenario, &radio, config.deploy.random_draws, config.seed, &limits)?;
    let prov = provenance(config);
    let dir = out_dir.join("deploy");
    let mut written = Vec::new();
    write(&cost_curve_csv(&report.cost_curve, &prov), dir.join("cost_curve.csv"), &mut written)?;
    write(&solution_csv(&cmp.proposed_solution, &prov), dir.join("solution.csv"), &mut written)?;
    write(&comparison_table(&cmp, &prov), dir.join("comparison.csv"), &mut written)?;
    Ok(written)
}

/// One row per method; `oracle_gap` (objective / oracle − 1) only when the
/// oracle ran.
pub fn comparison_table(cmp: &InstanceComparison, prov: &Provenance) -> CsvTable {
    let mut header = vec!["method", "objective"];
    if cmp.oracle.is_some() {
        header.push("oracle_gap");
    }
    let mut t = CsvTable::new(prov, &header);
    let mut rows = vec![("proposed", cmp.proposed), ("nearest", cmp.nearest), ("random", cmp.random_mean)];
    if let Some(o) = cmp.oracle {
        rows.push(("oracle", o));
    }
    for (method, obj) in rows {
        let mut row = vec![method.to_string(), fmt_f64(obj)];
        if let Some(o) = cmp.oracle {
            row.push(fmt_f64(obj / o - 1.0));
        }
        t.push_row(row);
    }
    t
}

/// Figure bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Convergence,
    DeployCompare,
    TotalCost,
    Breakdown,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [
        FigureId::Convergence,
        FigureId::DeployCompare,
        FigureId::TotalCost,
        FigureId::Breakdown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Convergence => "fig-convergence",
            FigureId::DeployCompare => "fig-deploy-compare",
            FigureId::TotalCost => "fig-total-cost",
            FigureId::Breakdown => "fig-breakdown",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = FigureId::ALL.iter().map(|f| f.as_str()).collect();
                Error::invalid("figure-id", format!("unknown `{s}`; expected one of {}", known.join(", ")))
            })
    }
}

/// Policy trained for one network size, with its curve.
#[derive(Debug, Clone)]
pub struct SizedPolicy {
    pub num_devices: usize,
    pub num_bs: usize,
    pub policy: DeployPolicy,
    pub report: TrainingReport,
}

/// One policy per `(K, B)` of the sweep, trained on its own instance with
/// device positions redrawn every step so it generalizes across instances.
pub fn train_per_size(config: &ExperimentConfig) -> Result<Vec<SizedPolicy>> {
    config.validate()?;
    config
        .sweep
        .network_sizes()
        .par_iter()
        .map(|&(k, b)| {
            let topo_config = config.topology_for(k, b);
            let scenario = sample_scenario(train_instance_seed(config, k, b), &topo_config)?;
            let dynamics = Dynamics {
                resample_fading: true,
                resample_positions: true,
            };
            let (policy, report) =
                train_deploy_policy(config, &scenario, &topo_config, dynamics, train_instance_seed(config, k, b))?;
            Ok(SizedPolicy {
                num_devices: k,
                num_bs: b,
                policy,
                report,
            })
        })
        .collect()
}

/// Mean objectives of one network size over the evaluation instances.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeComparison {
    pub num_devices: usize,
    pub num_bs: usize,
    pub instances: Vec<InstanceComparison>,
}

impl SizeComparison {
    fn mean(&self, f: impl Fn(&InstanceComparison) -> f64) -> f64 {
        self.instances.iter().map(f).sum::<f64>() / self.instances.len() as f64
    }

    pub fn proposed_mean(&self) -> f64 {
        self.mean(|c| c.proposed)
    }

    pub fn nearest_mean(&self) -> f64 {
        self.mean(|c| c.nearest)
    }

    pub fn random_mean(&self) -> f64 {
        self.mean(|c| c.random_mean)
    }
}

/// Scores each trained policy and both baselines on `eval_seeds` fresh
/// instances of its size.
pub fn compare_per_size(config: &ExperimentConfig, trained: &[SizedPolicy]) -> Result<Vec<SizeComparison>> {
    let radio = config.radio.params()?;
    let limits = OracleLimits::default();
    trained
        .par_iter()
        .map(|t| {
            let topo_config = config.topology_for(t.num_devices, t.num_bs);
            let instances = (0..config.deploy.eval_seeds)
                .map(|i| {
                    let seed = eval_instance_seed(config, i);
                    let scenario = sample_scenario(seed, &topo_config)?;
                    compare_on_instance(&t.policy, &scenario, &radio, config.deploy.random_draws, seed, &limits)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SizeComparison {
                num_devices: t.num_devices,
                num_bs: t.num_bs,
                instances,
            })
        })
        .collect()
}

pub const DEPLOY_COMPARE_HEADER: [&str; 6] = ["num_devices", "num_bs", "method", "mean_objective", "std_error", "instances"];

pub fn deploy_compare_table(rows: &[SizeComparison], prov: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(prov, &DEPLOY_COMPARE_HEADER);
    for size in rows {
        let methods: [(&str, fn(&InstanceComparison) -> f64); 3] = [
            ("proposed", |c| c.proposed),
            ("nearest", |c| c.nearest),
            ("random", |c| c.random_mean),
        ];
        for (name, f) in methods {
            let xs: Vec<f64> = size.instances.iter().map(f).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let se = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            t.push_row([
                size.num_devices.to_string(),
                size.num_bs.to_string(),
                name.to_string(),
                fmt_f64(mean),
                fmt_f64(se),
                xs.len().to_string(),
            ]);
        }
    }
    t
}

pub const BREAKDOWN_HEADER: [&str; 8] = [
    "policy",
    "p_tx",
    "q",
    "omega",
    "C",
    "avg_aoci",
    "avg_update_cost",
    "total_cost",
];

pub fn breakdown_table(runs: &[PolicyRun], prov: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(prov, &BREAKDOWN_HEADER);
    for r in runs {
        let full = metrics_row(r.name, &r.sim, &r.metrics);
        t.push_row(full.into_iter().take(BREAKDOWN_HEADER.len()));
    }
    t
}

/// Writes the CSV bundle of one figure under `<out_dir>/<figure-id>/`.
pub fn cmd_experiment(config: &ExperimentConfig, figure: FigureId, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let prov = provenance(config);
    let dir = out_dir.join(figure.as_str());
    let mut written = Vec::new();
    match figure {
        FigureId::Convergence => {
            for t in train_per_size(config)? {
                let name = format!("cost_curve_K{}_B{}.csv", t.num_devices, t.num_bs);
                write(&cost_curve_csv(&t.report.cost_curve, &prov), dir.join(name), &mut written)?;
            }
        }
        FigureId::DeployCompare => {
            let trained = train_per_size(config)?;
            let rows = compare_per_size(config, &trained)?;
            write(&deploy_compare_table(&rows, &prov), dir.join("deploy_compare.csv"), &mut written)?;
        }
        FigureId::TotalCost => {
            let runs = run_schedule_sweep(config)?;
            write(&metrics_table(&runs, &prov), dir.join("total_cost.csv"), &mut written)?;
        }
        FigureId::Breakdown => {
            let runs = run_schedule_sweep(config)?;
            write(&breakdown_table(&runs, &prov), dir.join("breakdown.csv"), &mut written)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        for f in FigureId::ALL {
            assert_eq!(f.as_str().parse::<FigureId>().unwrap(), f);
        }
        let err = "fig-nope".parse::<FigureId>().unwrap_err();
        assert!(err.to_string().contains("figure-id"));
    }

    #[test]
    fn explicit_output_dir_wins() {
        assert_eq!(output_dir(Some(Path::new("/x/y"))), PathBuf::from("/x/y"));
    }

    #[test]
    fn comparison_gap_column_follows_the_oracle() {
        let prov = Provenance::new("", 0);
        let sol = DeploymentSolution::from_indices(vec![true], &[0], &[0]);
        let mut cmp = InstanceComparison {
            proposed: 1.1,
            nearest: 1.2,
            random_mean: 1.5,
            oracle: None,
            proposed_solution: sol,
            proposed_hosts: 1,
            nearest_hosts: 1,
        };
        let t = comparison_table(&cmp, &prov);
        assert!(t.column("oracle_gap").is_err());
        assert_eq!(t.rows.len(), 3);
        cmp.oracle = Some(1.0);
        let t = comparison_table(&cmp, &prov);
        let gap = t.column("oracle_gap").unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!((t.rows[0][gap].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(t.rows[3][gap], "0.0");
    }
}
