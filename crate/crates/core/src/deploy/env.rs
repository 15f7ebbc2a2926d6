use rand::Rng;
use serde::{Deserialize, Serialize};

use super::baselines::nearest_baseline;
use super::repair::repair_with_table;
use super::solution::{deployment_objective, DeploymentSolution};
use super::table::LatencyTable;
use crate::error::{ensure_positive, Error, Result};
use crate::net_model::{
    achievable_rate, resample_fading, resample_positions, LatencyParams, RadioParams, Topology, TopologyConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    /// β: 1 scores latency only, 0 hosting cost only.
    pub latency_weight: f64,
    /// Θ: operating cost of one DT server.
    pub per_dt_cost: f64,
    pub latency_scale: f64,
    pub cost_scale: f64,
}

impl RewardParams {
    /// Latency normalized by the nearest-baseline latency of `topo`; hosting
    /// cost by `B Θ`.
    pub fn for_instance(
        latency_weight: f64,
        per_dt_cost: f64,
        topo: &Topology,
        lat: &LatencyParams,
        radio: &RadioParams,
    ) -> Result<Self> {
        let nearest = nearest_baseline(topo, lat, radio)?;
        let params = RewardParams {
            latency_weight,
            per_dt_cost,
            latency_scale: deployment_objective(&nearest, topo, lat, radio)?,
            cost_scale: topo.num_bs() as f64 * per_dt_cost,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.latency_weight) {
            return Err(Error::invalid("latency_weight", format!("{} outside [0, 1]", self.latency_weight)));
        }
        if !(self.per_dt_cost >= 0.0) {
            return Err(Error::invalid("per_dt_cost", "must be >= 0"));
        }
        ensure_positive("latency_scale", self.latency_scale)?;
        ensure_positive("cost_scale", self.cost_scale)
    }

    /// Normalized deployment cost `β T / T_scale + (1 − β) |M| Θ / E_scale`;
    /// the reward is its negation.
    pub fn cost(&self, latency: f64, num_hosts: usize) -> f64 {
        self.latency_weight * latency / self.latency_scale
            + (1.0 - self.latency_weight) * num_hosts as f64 * self.per_dt_cost / self.cost_scale
    }
}

/// How the environment moves between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dynamics {
    pub resample_fading: bool,
    pub resample_positions: bool,
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics {
            resample_fading: true,
            resample_positions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployEnvState {
    pub host_flags: Vec<bool>,
    pub access_assoc: Vec<Vec<bool>>,
    /// J_b: DTs hosted per BS.
    pub active_dt_counts: Vec<usize>,
    /// R_{k,b} in bits/s on the current topology.
    pub rates: Vec<Vec<f64>>,
}

impl DeployEnvState {
    fn empty(topo: &Topology, radio: &RadioParams) -> Result<Self> {
        let b_count = topo.num_bs();
        Ok(DeployEnvState {
            host_flags: vec![false; b_count],
            access_assoc: vec![vec![false; b_count]; topo.num_devices()],
            active_dt_counts: vec![0; b_count],
            rates: rates(topo, radio)?,
        })
    }
}

fn rates(topo: &Topology, radio: &RadioParams) -> Result<Vec<Vec<f64>>> {
    topo.channel_gains
        .iter()
        .map(|row| row.iter().map(|&g| achievable_rate(g, radio)).collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The repaired (feasible) deployment that was applied.
    pub solution: DeploymentSolution,
    /// Average interaction latency of `solution` on the pre-step topology.
    pub latency: f64,
    pub num_hosts: usize,
    /// Normalized deployment cost; `reward = -cost`.
    pub cost: f64,
    pub reward: f64,
}

/// Deployment environment: one step applies a joint action on the current
/// topology, scores it, then moves the topology.
#[derive(Debug, Clone)]
pub struct DeployEnv {
    pub topo: Topology,
    pub lat: LatencyParams,
    pub radio: RadioParams,
    pub topo_config: TopologyConfig,
    pub dynamics: Dynamics,
    pub reward: RewardParams,
    pub state: DeployEnvState,
    table: LatencyTable,
}

impl DeployEnv {
    pub fn new(
        topo: Topology,
        lat: LatencyParams,
        radio: RadioParams,
        topo_config: TopologyConfig,
        dynamics: Dynamics,
        reward: RewardParams,
    ) -> Result<Self> {
        topo.validate(None)?;
        lat.validate()?;
        reward.validate()?;
        if lat.history_bits.len() != topo.num_devices() {
            return Err(Error::invalid("history_bits", "one entry per device required"));
        }
        let table = LatencyTable::new(&topo, &lat, &radio)?;
        let state = DeployEnvState::empty(&topo, &radio)?;
        Ok(DeployEnv {
            topo,
            lat,
            radio,
            topo_config,
            dynamics,
            reward,
            state,
            table,
        })
    }

    /// Latency table of the current topology.
    pub fn table(&self) -> &LatencyTable {
        &self.table
    }

    /// Clears the deployment part of the state (topology untouched).
    pub fn reset(&mut self) -> Result<()> {
        self.state = DeployEnvState::empty(&self.topo, &self.radio)?;
        Ok(())
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: &DeploymentSolution, rng: &mut R) -> Result<StepOutcome> {
        let solution = repair_with_table(action, &self.topo, &self.table)?;
        let latency = deployment_objective(&solution, &self.topo, &self.lat, &self.radio)?;
        let num_hosts = solution.num_hosts();
        let cost = self.reward.cost(latency, num_hosts);
        if self.dynamics.resample_positions {
            resample_positions(&mut self.topo, rng, &self.topo_config);
        } else if self.dynamics.resample_fading {
            resample_fading(&mut self.topo, rng, &self.topo_config);
        }
        if self.dynamics.resample_positions || self.dynamics.resample_fading {
            self.table = LatencyTable::new(&self.topo, &self.lat, &self.radio)?;
        }
        self.state = DeployEnvState {
            host_flags: solution.host_flags.clone(),
            access_assoc: solution.access_assoc.clone(),
            active_dt_counts: solution.host_loads(),
            rates: rates(&self.topo, &self.radio)?,
        };
        Ok(StepOutcome {
            solution,
            latency,
            num_hosts,
            cost,
            reward: -cost,
        })
    }
}

/// Free-function form of [`DeployEnv::step`].
pub fn env_step<R: Rng + ?Sized>(
    env: &mut DeployEnv,
    joint_action: &DeploymentSolution,
    rng: &mut R,
) -> Result<StepOutcome> {
    env.step(joint_action, rng)
}
