//! Experiment configuration: one TOML file with a flat section per module.
//!
//! Precedence is flags > file > defaults. Flags arrive as `section.key=value`
//! overrides applied to the parsed file before deserialization, so they go
//! through the same unknown-key and range checks as file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deploy::{Dynamics, LearnerConfig};
use crate::error::{ensure_positive, ensure_probability, Error, Result};
use crate::net_model::{RadioParams, TopologyConfig};
use crate::sched_mdp::MdpSpec;
use crate::simulator::SimConfig;
use crate::state_process::DeliveryModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            bandwidth_hz: 20e6,
            tx_power_dbm: 23.0,
            noise_psd_dbm_hz: -174.0,
        }
    }
}

impl RadioConfig {
    pub fn params(&self) -> Result<RadioParams> {
        RadioParams::from_dbm(self.bandwidth_hz, self.tx_power_dbm, self.noise_psd_dbm_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    /// Per-slot flip probability of the PT state.
    pub q: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { q: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdpConfig {
    pub aoci_cap: u32,
    pub aoi_cap: u32,
    pub update_cost: f64,
    pub weight: f64,
    pub max_iterations: usize,
}

impl Default for MdpConfig {
    fn default() -> Self {
        MdpConfig {
            aoci_cap: 100,
            aoi_cap: 100,
            update_cost: 12.0,
            weight: 1.0,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub horizon: u64,
    pub runs: usize,
    pub burn_in: u64,
    pub slot_duration_s: f64,
    /// Keep the slot trace of the first replication of the solved policy.
    pub write_trace: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: 1000,
            runs: 1000,
            burn_in: 0,
            slot_duration_s: 0.01,
            write_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeployConfig {
    /// β in the reward.
    pub latency_weight: f64,
    /// Θ, per-server operating cost.
    pub per_dt_cost: f64,
    pub dynamics: Dynamics,
    /// Instances scored when comparing methods.
    pub eval_seeds: usize,
    /// Random-baseline draws averaged per instance.
    pub random_draws: usize,
}

impl Default for DeployConfig {
    fn default() -> Self {
        DeployConfig {
            latency_weight: 1.0,
            per_dt_cost: 1.0,
            dynamics: Dynamics::default(),
            eval_seeds: 20,
            random_draws: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub p_tx: Vec<f64>,
    pub q: Vec<f64>,
    pub update_cost: Vec<f64>,
    pub weight: Vec<f64>,
    pub num_devices: Vec<usize>,
    pub num_bs: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_tx: vec![1.0],
            q: (1..=10).map(|i| i as f64 / 10.0).collect(),
            update_cost: vec![12.0],
            weight: vec![1.0],
            num_devices: vec![20, 40, 60],
            num_bs: vec![4, 6],
        }
    }
}

/// One (p_tx, q, C, ω) combination of the scheduling sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p_tx: f64,
    pub q: f64,
    pub update_cost: f64,
    pub weight: f64,
}

impl SweepConfig {
    pub fn schedule_points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &p_tx in &self.p_tx {
            for &update_cost in &self.update_cost {
                for &weight in &self.weight {
                    for &q in &self.q {
                        out.push(SweepPoint {
                            p_tx,
                            q,
                            update_cost,
                            weight,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn network_sizes(&self) -> Vec<(usize, usize)> {
        self.num_devices
            .iter()
            .flat_map(|&k| self.num_bs.iter().map(move |&b| (k, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    pub radio: RadioConfig,
    pub topology: TopologyConfig,
    pub chain: ChainConfig,
    pub delivery: DeliveryModel,
    pub mdp: MdpConfig,
    pub simulation: SimulationConfig,
    pub learner: LearnerConfig,
    pub deploy: DeployConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "default".into(),
            seed: 1,
            radio: RadioConfig::default(),
            topology: TopologyConfig::default(),
            chain: ChainConfig::default(),
            delivery: DeliveryModel::Fixed { p_tx: 0.8 },
            mdp: MdpConfig::default(),
            simulation: SimulationConfig::default(),
            learner: LearnerConfig::default(),
            deploy: DeployConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Prefixes the parameter name of a validation error with its section.
fn section<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name: inner, reason } => Error::InvalidParameter {
            name: format!("{name}.{inner}"),
            reason,
        },
        other => other,
    })
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies `overrides`, deserializes and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_with(&text, overrides)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        // A delivery section without `mode` means the fixed model.
        if let Some(toml::Value::Table(d)) = table.get_mut("delivery") {
            d.entry("mode").or_insert_with(|| toml::Value::String("fixed".into()));
        }
        let config: ExperimentConfig = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical TOML of the effective configuration (hashed for provenance).
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.trim().is_empty() {
            return Err(Error::invalid("scenario", "must not be empty"));
        }
        section("radio", self.radio.params().map(|_| ()))?;
        section("topology", self.topology.validate())?;
        section("chain", ensure_probability("q", self.chain.q))?;
        section("delivery", self.delivery.validate())?;
        section("mdp", self.mdp_spec().validate())?;
        section("mdp", ensure_finite_nonneg("update_cost", self.mdp.update_cost))?;
        section("mdp", ensure_finite_nonneg("weight", self.mdp.weight))?;
        if self.mdp.max_iterations == 0 {
            return Err(Error::invalid("mdp.max_iterations", "must be >= 1"));
        }
        section("simulation", self.sim_config().validate())?;
        section("learner", self.learner.validate())?;
        let d = &self.deploy;
        if !(0.0..=1.0).contains(&d.latency_weight) {
            return Err(Error::invalid("deploy.latency_weight", format!("{} outside [0, 1]", d.latency_weight)));
        }
        section("deploy", ensure_positive("per_dt_cost", d.per_dt_cost))?;
        if d.eval_seeds == 0 {
            return Err(Error::invalid("deploy.eval_seeds", "must be >= 1"));
        }
        if d.random_draws == 0 {
            return Err(Error::invalid("deploy.random_draws", "must be >= 1"));
        }
        let s = &self.sweep;
        for (name, values) in [("p_tx", &s.p_tx), ("q", &s.q)] {
            for &v in values {
                section("sweep", ensure_probability(name, v))?;
            }
        }
        for (name, values) in [("update_cost", &s.update_cost), ("weight", &s.weight)] {
            for &v in values {
                section("sweep", ensure_finite_nonneg(name, v))?;
            }
        }
        if s.num_devices.contains(&0) {
            return Err(Error::invalid("sweep.num_devices", "must be >= 1"));
        }
        if s.num_bs.contains(&0) {
            return Err(Error::invalid("sweep.num_bs", "must be >= 1"));
        }
        for (k, b) in s.network_sizes() {
            let topo = TopologyConfig {
                num_devices: k,
                num_bs: b,
                ..self.topology.clone()
            };
            section("sweep", topo.validate())?;
        }
        Ok(())
    }

    pub fn mdp_spec(&self) -> MdpSpec {
        MdpSpec {
            aoci_cap: self.mdp.aoci_cap,
            aoi_cap: self.mdp.aoi_cap,
            p_tx: self.delivery.p_tx(),
            content_q: self.chain.q,
            update_cost: self.mdp.update_cost,
            weight: self.mdp.weight,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            aoci_cap: self.mdp.aoci_cap,
            aoi_cap: self.mdp.aoi_cap,
            content_q: self.chain.q,
            delivery: self.delivery,
            update_cost: self.mdp.update_cost,
            weight: self.mdp.weight,
            horizon: self.simulation.horizon,
            burn_in: self.simulation.burn_in,
            runs: self.simulation.runs,
            seed: self.seed,
            slot_duration_s: self.simulation.slot_duration_s,
        }
    }

    /// Simulation settings at one sweep point.
    pub fn sim_config_at(&self, point: &SweepPoint) -> SimConfig {
        SimConfig {
            content_q: point.q,
            delivery: DeliveryModel::Fixed { p_tx: point.p_tx },
            update_cost: point.update_cost,
            weight: point.weight,
            ..self.sim_config()
        }
    }

    pub fn topology_for(&self, num_devices: usize, num_bs: usize) -> TopologyConfig {
        TopologyConfig {
            num_devices,
            num_bs,
            ..self.topology.clone()
        }
    }
}

fn ensure_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// Applies `a.b.c=value` to the table; `value` is parsed as a TOML value,
/// falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = parse_value(raw.trim());
    let mut cursor = table;
    for key in &keys[..keys.len() - 1] {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{assignment}`: `{key}` is not a section")))?;
    }
    cursor.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
