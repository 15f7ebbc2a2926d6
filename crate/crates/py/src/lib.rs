//! Python bindings: MDP solve/evaluate, Monte-Carlo simulation, deployment
//! baselines and oracle, and the experiment commands.

use std::path::PathBuf;

use dtsync::config::ExperimentConfig;
use dtsync::deploy::{deployment_objective, exhaustive_oracle, nearest_baseline, random_baseline, OracleLimits};
use dtsync::experiment::{self, FigureId};
use dtsync::net_model::{sample_scenario, RadioParams, TopologyConfig};
use dtsync::sched_mdp::{self, AociState, PolicyTable};
use dtsync::simulator::{self, SchedulePolicy, SimConfig};
use dtsync::state_process::DeliveryModel;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: dtsync::Error) -> PyErr {
    match e {
        dtsync::Error::InvalidParameter { .. } | dtsync::Error::Config(_) | dtsync::Error::OracleLimit(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Scheduling MDP parameters.
#[pyclass(name = "MdpSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyMdpSpec {
    inner: sched_mdp::MdpSpec,
}

#[pymethods]
impl PyMdpSpec {
    #[new]
    #[pyo3(signature = (cap, p_tx, q, update_cost=12.0, weight=1.0, aoi_cap=None))]
    fn new(cap: u32, p_tx: f64, q: f64, update_cost: f64, weight: f64, aoi_cap: Option<u32>) -> PyResult<Self> {
        let inner = sched_mdp::MdpSpec {
            aoci_cap: cap,
            aoi_cap: aoi_cap.unwrap_or(cap),
            p_tx,
            content_q: q,
            update_cost,
            weight,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyMdpSpec { inner })
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    /// Smallest AoCI worth updating at AoI `aoi`, or None.
    fn threshold_for(&self, aoi: u32) -> Option<u32> {
        sched_mdp::threshold_for(aoi, &self.inner)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "MdpSpec(aoci_cap={}, aoi_cap={}, p_tx={}, q={}, update_cost={}, weight={})",
            s.aoci_cap, s.aoi_cap, s.p_tx, s.content_q, s.update_cost, s.weight
        )
    }
}

/// Gain, bias and policy of a solved MDP.
#[pyclass(name = "SolveResult", frozen)]
struct PySolveResult {
    spec: sched_mdp::MdpSpec,
    inner: sched_mdp::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn gain(&self) -> f64 {
        self.inner.gain
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn shortcut_mismatches(&self) -> usize {
        self.inner.stats.shortcut_mismatches
    }

    /// Update decision at `(aoci, aoi)`.
    fn action(&self, aoci: u32, aoi: u32) -> PyResult<bool> {
        let s = AociState::new(aoci, aoi);
        if !self.spec.contains(s) {
            return Err(PyValueError::new_err(format!("({aoci}, {aoi}) is outside the state grid")));
        }
        Ok(self.inner.policy.action(s))
    }

    fn bias(&self, aoci: u32, aoi: u32) -> PyResult<f64> {
        let s = AociState::new(aoci, aoi);
        if !self.spec.contains(s) {
            return Err(PyValueError::new_err(format!("({aoci}, {aoi}) is outside the state grid")));
        }
        Ok(self.inner.bias[self.spec.index(s)])
    }

    /// Per-AoI update threshold on AoCI (None: never update).
    fn thresholds(&self) -> Vec<Option<u32>> {
        (1..=self.spec.aoi_cap).map(|d| self.inner.policy.threshold(d)).collect()
    }

    fn is_monotone(&self) -> bool {
        self.inner.policy.monotonicity_violation().is_none()
    }
}

/// Relative policy iteration.
#[pyfunction]
fn solve(py: Python<'_>, spec: PyMdpSpec) -> PyResult<PySolveResult> {
    let inner = py
        .detach(|| sched_mdp::relative_policy_iteration(&spec.inner))
        .map_err(to_py)?;
    Ok(PySolveResult { spec: spec.inner, inner })
}

/// Relative value iteration (independent check of `solve`).
#[pyfunction]
fn solve_rvi(py: Python<'_>, spec: PyMdpSpec) -> PyResult<PySolveResult> {
    let inner = py
        .detach(|| sched_mdp::relative_value_iteration(&spec.inner))
        .map_err(to_py)?;
    Ok(PySolveResult { spec: spec.inner, inner })
}

/// Long-run average cost from `(1, 1)` of the zero-wait policy or of a
/// solved policy.
#[pyfunction]
#[pyo3(signature = (spec, result=None))]
fn average_cost(spec: PyMdpSpec, result: Option<PyRef<'_, PySolveResult>>) -> PyResult<f64> {
    let policy = match result {
        Some(r) => r.inner.policy.clone(),
        None => PolicyTable::zero_wait(&spec.inner),
    };
    sched_mdp::average_cost_of(&policy, &spec.inner).map_err(to_py)
}

/// Monte-Carlo metrics of one policy: `"ZW"`, `"SAC"`, `"idle"` or a
/// solved result.
#[pyclass(name = "Metrics", frozen, get_all)]
struct PyMetrics {
    avg_aoci: f64,
    avg_update_cost: f64,
    total_cost: f64,
    update_rate: f64,
    std_error: f64,
    runs: usize,
    slots: u64,
}

#[pyfunction]
#[pyo3(signature = (spec, policy, runs=1000, horizon=1000, seed=1, burn_in=0))]
fn simulate(
    py: Python<'_>,
    spec: PyMdpSpec,
    policy: &Bound<'_, PyAny>,
    runs: usize,
    horizon: u64,
    seed: u64,
    burn_in: u64,
) -> PyResult<PyMetrics> {
    let rule = if let Ok(r) = policy.cast::<PySolveResult>() {
        SchedulePolicy::Table(r.get().inner.policy.clone())
    } else {
        match policy.extract::<String>()?.as_str() {
            "ZW" => SchedulePolicy::ZeroWait,
            "SAC" => SchedulePolicy::SampleAtChange,
            "idle" => SchedulePolicy::Idle,
            other => return Err(PyValueError::new_err(format!("unknown policy `{other}`"))),
        }
    };
    let s = spec.inner;
    let config = SimConfig {
        aoci_cap: s.aoci_cap,
        aoi_cap: s.aoi_cap,
        content_q: s.content_q,
        delivery: DeliveryModel::Fixed { p_tx: s.p_tx },
        update_cost: s.update_cost,
        weight: s.weight,
        horizon,
        burn_in,
        runs,
        seed,
        ..SimConfig::default()
    };
    let m = py.detach(|| simulator::run_monte_carlo(&rule, &config)).map_err(to_py)?;
    Ok(PyMetrics {
        avg_aoci: m.avg_aoci,
        avg_update_cost: m.avg_update_cost,
        total_cost: m.total_avg_cost,
        update_rate: m.update_rate,
        std_error: m.std_error,
        runs: m.runs,
        slots: m.slots,
    })
}

/// Average interaction latency of the nearest baseline, the mean of
/// `random_draws` random deployments and (small instances only) the
/// exhaustive optimum on the instance drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (seed, num_devices=6, num_bs=4, random_draws=20))]
fn deploy_baselines(
    py: Python<'_>,
    seed: u64,
    num_devices: usize,
    num_bs: usize,
    random_draws: usize,
) -> PyResult<(f64, f64, Option<f64>)> {
    let cfg = TopologyConfig {
        num_devices,
        num_bs,
        ..TopologyConfig::default()
    };
    py.detach(|| -> dtsync::Result<(f64, f64, Option<f64>)> {
        let radio = RadioParams::default();
        let sc = sample_scenario(seed, &cfg)?;
        let nearest = deployment_objective(&nearest_baseline(&sc.topo, &sc.lat, &radio)?, &sc.topo, &sc.lat, &radio)?;
        let mut sum = 0.0;
        for draw in 0..random_draws.max(1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(draw as u64);
            let sol = random_baseline(&sc.topo, &sc.lat, &radio, &mut rng)?;
            sum += deployment_objective(&sol, &sc.topo, &sc.lat, &radio)?;
        }
        let limits = OracleLimits::default();
        let oracle = if limits.admits(&sc.topo) {
            Some(exhaustive_oracle(&sc.topo, &sc.lat, &radio, &limits)?.objective)
        } else {
            None
        };
        Ok((nearest, sum / random_draws.max(1) as f64, oracle))
    })
    .map_err(to_py)
}

/// Validates a TOML configuration (plus `key=value` overrides) and returns
/// its canonical text.
#[pyfunction]
#[pyo3(signature = (text, overrides=Vec::new()))]
fn validate_config(text: &str, overrides: Vec<String>) -> PyResult<String> {
    Ok(ExperimentConfig::from_toml_with(text, &overrides).map_err(to_py)?.canonical_toml())
}

/// Runs `solve`, `simulate`, `deploy` or a figure id; returns written paths.
#[pyfunction]
#[pyo3(signature = (command, out_dir, text="", overrides=Vec::new()))]
fn run_command(
    py: Python<'_>,
    command: &str,
    out_dir: PathBuf,
    text: &str,
    overrides: Vec<String>,
) -> PyResult<Vec<PathBuf>> {
    let config = ExperimentConfig::from_toml_with(text, &overrides).map_err(to_py)?;
    let command = command.to_string();
    py.detach(move || match command.as_str() {
        "solve" => experiment::cmd_solve(&config, &out_dir),
        "simulate" => experiment::cmd_simulate(&config, &out_dir),
        "deploy" => experiment::cmd_deploy(&config, &out_dir),
        fig => {
            let id: FigureId = fig.parse()?;
            experiment::cmd_experiment(&config, id, &out_dir)
        }
    })
    .map_err(to_py)
}

#[pymodule]
pub fn dtsync_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMdpSpec>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyMetrics>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rvi, m)?)?;
    m.add_function(wrap_pyfunction!(average_cost, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(deploy_baselines, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
