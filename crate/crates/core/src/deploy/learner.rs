//! Centralized advantage actor-critic for DT placement and association.
//!
//! The actor builds a deployment in two stages. A host scorer gives each BS
//! a logit for running a DT server. Devices are then placed one at a time
//! (largest payload first) by a shared pair scorer that rates every hosting
//! BS with room, from features of the marginal latency the placement would
//! add. The critic maps global state features to a value estimate and
//! supplies TD(0) advantages.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::env::DeployEnv;
use super::mlp::{Adam, Mlp, Tape};
use super::solution::DeploymentSolution;
use super::table::LatencyTable;
use crate::error::{Error, Result};
use crate::net_model::{LatencyParams, RadioParams, Topology};

const PAIR_FEATURES: usize = 8;
const HOST_FEATURES: usize = 5;
const CRITIC_FEATURES: usize = 6;
/// Initial host logit: start out hosting on most BSs.
const HOST_PRIOR: f64 = 1.0;
/// Consecutive bad iterations before training is declared diverged.
const DIVERGENCE_WINDOW: usize = 100;
const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// α, shared by actor and critic.
    pub learning_rate: f64,
    /// γ.
    pub discount: f64,
    /// Standard deviation of the logit noise at the first iteration; it
    /// decays linearly to zero.
    pub noise_scale: f64,
    pub iterations: usize,
    /// Steps between resets of the deployment state.
    pub episode_length: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            learning_rate: 1e-3,
            discount: 0.6,
            noise_scale: 1.0,
            iterations: 5000,
            episode_length: 50,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid("discount", format!("{} outside (0, 1]", self.discount)));
        }
        crate::error::ensure_positive("learning_rate", self.learning_rate)?;
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale", "must be finite and >= 0"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be >= 1"));
        }
        if self.episode_length == 0 {
            return Err(Error::invalid("episode_length", "must be >= 1"));
        }
        for (name, widths) in [("actor_hidden", &self.actor_hidden), ("critic_hidden", &self.critic_hidden)] {
            if widths.contains(&0) {
                return Err(Error::invalid(name, "layer widths must be >= 1"));
            }
        }
        Ok(())
    }
}

fn layer_sizes(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    sizes
}

/// The trained actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployPolicy {
    pub host_net: Mlp,
    pub pair_net: Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Net {
    Host,
    Pair,
}

/// One scored decision: the tape of the forward pass and `d log π / d score`.
struct GradTerm {
    net: Net,
    tape: Tape,
    dlogp: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl DeployPolicy {
    pub fn new<R: Rng + ?Sized>(config: &LearnerConfig, rng: &mut R) -> Self {
        let mut host_net = Mlp::new(&layer_sizes(HOST_FEATURES, &config.actor_hidden), rng);
        host_net.set_output_bias(HOST_PRIOR);
        let pair_net = Mlp::new(&layer_sizes(PAIR_FEATURES, &config.actor_hidden), rng);
        DeployPolicy { host_net, pair_net }
    }

    /// Deterministic deployment: hosts with positive logit, each device on
    /// its top-scored BS.
    pub fn greedy_solution(
        &self,
        topo: &Topology,
        lat: &LatencyParams,
        radio: &RadioParams,
    ) -> Result<DeploymentSolution> {
        let table = LatencyTable::new(topo, lat, radio)?;
        Ok(self.decode(&table, topo, None, None)?.0)
    }

    fn decode(
        &self,
        table: &LatencyTable,
        topo: &Topology,
        mut sample: Option<(f64, &mut dyn RngCore)>,
        mut terms: Option<&mut Vec<GradTerm>>,
    ) -> Result<(DeploymentSolution, f64)> {
        let k_count = table.num_devices();
        let b_count = table.num_bs();
        let capacity = &topo.server_dt_capacity;
        if capacity.iter().sum::<usize>() < k_count {
            return Err(Error::invalid("server_dt_capacity", "total capacity below K"));
        }
        let mut log_prob = 0.0;

        // Host stage.
        let host_feats = host_features(table, topo);
        let mut hosts = vec![false; b_count];
        for b in 0..b_count {
            let tape = self.host_net.forward(&host_feats[b]);
            let z = tape.output()[0];
            let p = sigmoid(z);
            let on = match sample.as_mut() {
                Some((sigma, rng)) => {
                    let noise: f64 = rng.sample(StandardNormal);
                    rng.random::<f64>() < sigmoid(z + *sigma * noise)
                }
                None => z > 0.0,
            };
            hosts[b] = on;
            log_prob += if on { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
            if let Some(t) = terms.as_deref_mut() {
                t.push(GradTerm {
                    net: Net::Host,
                    tape,
                    dlogp: f64::from(u8::from(on)) - p,
                });
            }
        }
        let mut by_capacity: Vec<usize> = (0..b_count).collect();
        by_capacity.sort_by_key(|&m| (std::cmp::Reverse(capacity[m]), m));
        for &m in &by_capacity {
            let hosted: usize = (0..b_count).filter(|&j| hosts[j]).map(|j| capacity[j]).sum();
            if hosted >= k_count {
                break;
            }
            hosts[m] = true;
        }

        // Association stage.
        let max_cycles = topo.server_cycles.iter().cloned().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..k_count).collect();
        order.sort_by(|&a, &b| table.work[b].total_cmp(&table.work[a]).then(a.cmp(&b)));
        let mut loads = vec![0usize; b_count];
        let mut work_on = vec![0.0; b_count];
        let mut assign = vec![0usize; k_count];
        for (step, &k) in order.iter().enumerate() {
            let feasible: Vec<usize> = (0..b_count).filter(|&m| hosts[m] && loads[m] < capacity[m]).collect();
            let marginal: Vec<f64> = feasible
                .iter()
                .map(|&m| table.pair(k, m, loads[m] + 1) + work_on[m] / topo.server_cycles[m])
                .collect();
            let lo = marginal.iter().cloned().fold(f64::INFINITY, f64::min);
            let mean = marginal.iter().sum::<f64>() / marginal.len() as f64;
            let remaining = (k_count - step) as f64 / k_count as f64;
            let mut tapes = Vec::with_capacity(feasible.len());
            let mut scores = Vec::with_capacity(feasible.len());
            for (i, &m) in feasible.iter().enumerate() {
                let x = [
                    marginal[i] / lo - 1.0,
                    (marginal[i] / lo).ln(),
                    table.comm[k][m] / marginal[i],
                    (capacity[m] - loads[m]) as f64 / capacity[m] as f64,
                    loads[m] as f64 / k_count as f64,
                    topo.server_cycles[m] / max_cycles,
                    remaining,
                    (marginal[i] - mean) / mean,
                ];
                let tape = self.pair_net.forward(&x);
                scores.push(tape.output()[0]);
                tapes.push(tape);
            }
            let probs = softmax(&scores);
            let choice = match sample.as_mut() {
                Some((sigma, rng)) => {
                    let noisy: Vec<f64> = scores
                        .iter()
                        .map(|&s| {
                            let noise: f64 = rng.sample(StandardNormal);
                            s + *sigma * noise
                        })
                        .collect();
                    sample_index(&softmax(&noisy), rng.random::<f64>())
                }
                None => argmax(&scores),
            };
            log_prob += probs[choice].max(1e-300).ln();
            if let Some(t) = terms.as_deref_mut() {
                for (i, tape) in tapes.into_iter().enumerate() {
                    let indicator = if i == choice { 1.0 } else { 0.0 };
                    t.push(GradTerm {
                        net: Net::Pair,
                        tape,
                        dlogp: indicator - probs[i],
                    });
                }
            }
            let m = feasible[choice];
            assign[k] = m;
            loads[m] += 1;
            work_on[m] += table.work[k];
        }
        let access: Vec<usize> = assign.iter().enumerate().map(|(k, &m)| table.access[k][m]).collect();
        Ok((DeploymentSolution::from_indices(hosts, &assign, &access), log_prob))
    }
}

fn host_features(table: &LatencyTable, topo: &Topology) -> Vec<[f64; HOST_FEATURES]> {
    let k_count = table.num_devices();
    let b_count = table.num_bs();
    let max_cycles = topo.server_cycles.iter().cloned().fold(0.0, f64::max);
    let mean_comm = table.comm.iter().flatten().sum::<f64>() / (k_count * b_count) as f64;
    let mean_slope = table.slope.iter().flatten().sum::<f64>() / (k_count * b_count) as f64;
    let mut natural = vec![0usize; b_count];
    for k in 0..k_count {
        let best = (0..b_count)
            .min_by(|&a, &b| table.pair(k, a, 1).total_cmp(&table.pair(k, b, 1)).then(a.cmp(&b)))
            .expect("at least one BS");
        natural[best] += 1;
    }
    (0..b_count)
        .map(|b| {
            let comm_b = (0..k_count).map(|k| table.comm[k][b]).sum::<f64>() / k_count as f64;
            let slope_b = (0..k_count).map(|k| table.slope[k][b]).sum::<f64>() / k_count as f64;
            [
                topo.server_cycles[b] / max_cycles,
                topo.server_dt_capacity[b].min(k_count) as f64 / k_count as f64,
                comm_b / mean_comm - 1.0,
                natural[b] as f64 / k_count as f64,
                slope_b / mean_slope - 1.0,
            ]
        })
        .collect()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - hi).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn critic_features(env: &DeployEnv, prev_cost: f64, phase: f64) -> [f64; CRITIC_FEATURES] {
    let table = env.table();
    let k_count = table.num_devices() as f64;
    let b_count = table.num_bs();
    let counts = &env.state.active_dt_counts;
    let mean = counts.iter().sum::<usize>() as f64 / b_count as f64;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / b_count as f64;
    let floor: f64 = (0..table.num_devices())
        .map(|k| (0..b_count).map(|m| table.pair(k, m, 1)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / (k_count * b_count as f64);
    [
        env.state.host_flags.iter().filter(|&&h| h).count() as f64 / b_count as f64,
        counts.iter().copied().max().unwrap_or(0) as f64 / k_count,
        var.sqrt() / k_count,
        prev_cost,
        floor / env.reward.latency_scale,
        phase,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Normalized deployment cost of the action taken at each iteration.
    pub cost_curve: Vec<f64>,
    /// Average interaction latency of the same actions.
    pub latency_curve: Vec<f64>,
    /// Critic value estimate at each iteration.
    pub value_curve: Vec<f64>,
}

/// Trains on `env` for `config.iterations` steps.
pub fn actor_critic_train<R: RngCore>(
    env: &mut DeployEnv,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<(DeployPolicy, TrainingReport)> {
    config.validate()?;
    let mut policy = DeployPolicy::new(config, rng);
    let mut critic = Mlp::new(&layer_sizes(CRITIC_FEATURES, &config.critic_hidden), rng);
    let mut host_opt = Adam::new(policy.host_net.num_params(), config.learning_rate);
    let mut pair_opt = Adam::new(policy.pair_net.num_params(), config.learning_rate);
    let mut critic_opt = Adam::new(critic.num_params(), config.learning_rate);
    let mut report = TrainingReport {
        cost_curve: Vec::with_capacity(config.iterations),
        latency_curve: Vec::with_capacity(config.iterations),
        value_curve: Vec::with_capacity(config.iterations),
    };
    let mut prev_cost = 0.0;
    let mut step_in_episode = 0;
    let mut adv_sq = None::<f64>;
    let mut bad_run = 0;
    let mut terms = Vec::new();
    for iteration in 0..config.iterations {
        if step_in_episode == config.episode_length {
            env.reset()?;
            prev_cost = 0.0;
            step_in_episode = 0;
        }
        let sigma = config.noise_scale * (1.0 - iteration as f64 / config.iterations as f64);
        let phase = step_in_episode as f64 / config.episode_length as f64;
        let state = critic_features(env, prev_cost, phase);
        let v_tape = critic.forward(&state);
        let value = v_tape.output()[0];

        terms.clear();
        let table = env.table().clone();
        let (raw, _) = policy.decode(&table, &env.topo, Some((sigma, rng as &mut dyn RngCore)), Some(&mut terms))?;
        let outcome = env.step(&raw, rng)?;
        step_in_episode += 1;
        prev_cost = outcome.cost;
        report.cost_curve.push(outcome.cost);
        report.latency_curve.push(outcome.latency);
        report.value_curve.push(value);

        let initial = report.cost_curve[0];
        if !outcome.cost.is_finite() || outcome.cost > DIVERGENCE_FACTOR * initial {
            bad_run += 1;
            if bad_run >= DIVERGENCE_WINDOW {
                return Err(Error::TrainingFailure {
                    iteration,
                    reason: format!("deployment cost above {DIVERGENCE_FACTOR}x its initial value for {DIVERGENCE_WINDOW} iterations"),
                });
            }
        } else {
            bad_run = 0;
        }

        let next_phase = step_in_episode as f64 / config.episode_length as f64;
        let next_value = critic.eval(&critic_features(env, prev_cost, next_phase))[0];
        let target = outcome.reward + config.discount * next_value;
        let td = target - value;
        if !td.is_finite() {
            return Err(Error::TrainingFailure {
                iteration,
                reason: "non-finite temporal-difference error".into(),
            });
        }

        let mut critic_grad = vec![0.0; critic.num_params()];
        critic.backward(&v_tape, &[-td], &mut critic_grad);
        critic_opt.step(&mut critic.params, &critic_grad);

        let sq = adv_sq.map_or(td * td, |s| 0.99 * s + 0.01 * td * td);
        adv_sq = Some(sq);
        let advantage = td / (sq.sqrt() + 1e-8);
        let mut host_grad = vec![0.0; policy.host_net.num_params()];
        let mut pair_grad = vec![0.0; policy.pair_net.num_params()];
        for term in &terms {
            // Minimize −A log π.
            let upstream = [-advantage * term.dlogp];
            match term.net {
                Net::Host => policy.host_net.backward(&term.tape, &upstream, &mut host_grad),
                Net::Pair => policy.pair_net.backward(&term.tape, &upstream, &mut pair_grad),
            }
        }
        host_opt.step(&mut policy.host_net.params, &host_grad);
        pair_opt.step(&mut policy.pair_net.params, &pair_grad);
        if policy.pair_net.params.iter().chain(&policy.host_net.params).any(|p| !p.is_finite()) {
            return Err(Error::TrainingFailure {
                iteration,
                reason: "non-finite actor parameters".into(),
            });
        }
    }
    Ok((policy, report))
}
