//! Slotted Monte-Carlo engine for one PT-DT pair.
//!
//! Each slot: the content chain moves, the policy decides, an update (if
//! any) is delivered with the configured probability, and the ages evolve.
//! A delivered update carries new content iff the PT state differs from the
//! last delivered one.

mod policy;

pub use policy::{SchedulePolicy, SAC_NAME, ZW_NAME};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable, Provenance};
use crate::sched_mdp::{AociState, MdpSpec};
use crate::state_process::{bernoulli, ContentChain, DeliveryModel};

/// What happened in one slot, with the ages at the start of the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub scheduled: bool,
    pub delivered: bool,
    pub changed: bool,
    pub aoi: u32,
    pub aoci: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub aoci_cap: u32,
    pub aoi_cap: u32,
    pub content_q: f64,
    pub delivery: DeliveryModel,
    pub update_cost: f64,
    pub weight: f64,
    /// Measured slots per replication.
    pub horizon: u64,
    /// Slots simulated before measurement starts.
    pub burn_in: u64,
    pub runs: usize,
    pub seed: u64,
    pub slot_duration_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            aoci_cap: 100,
            aoi_cap: 100,
            content_q: 0.3,
            delivery: DeliveryModel::Fixed { p_tx: 0.8 },
            update_cost: 12.0,
            weight: 1.0,
            horizon: 1000,
            burn_in: 0,
            runs: 1000,
            seed: 1,
            slot_duration_s: 0.01,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.mdp_spec().validate()?;
        self.delivery.validate()?;
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be >= 1"));
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs", "must be >= 1"));
        }
        crate::error::ensure_positive("slot_duration_s", self.slot_duration_s)
    }

    /// The scheduling MDP matching this simulation.
    pub fn mdp_spec(&self) -> MdpSpec {
        MdpSpec {
            aoci_cap: self.aoci_cap,
            aoi_cap: self.aoi_cap,
            p_tx: self.delivery.p_tx(),
            content_q: self.content_q,
            update_cost: self.update_cost,
            weight: self.weight,
        }
    }
}

/// Mutable state of one simulated pair.
#[derive(Debug, Clone)]
pub struct PairState {
    pub t: u64,
    pub aoci: u32,
    pub aoi: u32,
    pub chain: ContentChain,
    /// PT state carried by the last delivered update.
    pub last_delivered: bool,
}

impl PairState {
    /// Starts synchronized one slot ago: ages `(1, 1)` and the DT holding
    /// the PT state of the previous slot.
    pub fn new(content_q: f64) -> Result<Self> {
        let chain = ContentChain::new(content_q)?;
        Ok(PairState {
            t: 0,
            aoci: 1,
            aoi: 1,
            last_delivered: chain.state(),
            chain,
        })
    }

    pub fn ages(&self) -> AociState {
        AociState::new(self.aoci, self.aoi)
    }
}

/// Runs one slot and returns its record. Exactly two uniforms are drawn per
/// slot (content flip, then delivery) whatever the action, so runs stay
/// aligned across policies under a common seed.
pub fn advance_slot<R: Rng + ?Sized>(
    state: &mut PairState,
    policy: &SchedulePolicy,
    config: &SimConfig,
    rng: &mut R,
) -> SlotRecord {
    state.chain.step(rng);
    let success = bernoulli(rng, config.delivery.p_tx());
    let differs = state.chain.state() != state.last_delivered;
    let scheduled = policy.decide(state.ages(), differs);
    let delivered = scheduled && success;
    let changed = delivered && differs;
    let record = SlotRecord {
        t: state.t,
        scheduled,
        delivered,
        changed,
        aoi: state.aoi,
        aoci: state.aoci,
    };
    if delivered {
        state.last_delivered = state.chain.state();
    }
    state.aoci = if changed { 1 } else { (state.aoci + 1).min(config.aoci_cap) };
    state.aoi = if delivered { 1 } else { (state.aoi + 1).min(config.aoi_cap) };
    state.t += 1;
    record
}

/// Integer tallies of one replication (measured slots only).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replication {
    pub run: usize,
    pub slots: u64,
    pub aoci_sum: u64,
    pub updates: u64,
    pub deliveries: u64,
    pub trace: Option<Vec<SlotRecord>>,
}

impl Replication {
    pub fn avg_aoci(&self) -> f64 {
        self.aoci_sum as f64 / self.slots as f64
    }

    pub fn avg_update_cost(&self, weighted_cost: f64) -> f64 {
        self.updates as f64 * weighted_cost / self.slots as f64
    }

    pub fn avg_total_cost(&self, weighted_cost: f64) -> f64 {
        self.avg_aoci() + self.avg_update_cost(weighted_cost)
    }
}

/// Per-replication RNG: one ChaCha stream per run index under the master seed.
pub fn replication_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

pub fn run_replication(
    policy: &SchedulePolicy,
    config: &SimConfig,
    run: usize,
    keep_trace: bool,
) -> Result<Replication> {
    config.validate()?;
    policy.validate(&config.mdp_spec())?;
    let mut rng = replication_rng(config.seed, run);
    let mut state = PairState::new(config.content_q)?;
    for _ in 0..config.burn_in {
        advance_slot(&mut state, policy, config, &mut rng);
    }
    let mut out = Replication {
        run,
        slots: config.horizon,
        aoci_sum: 0,
        updates: 0,
        deliveries: 0,
        trace: keep_trace.then(|| Vec::with_capacity(config.horizon as usize)),
    };
    for _ in 0..config.horizon {
        let rec = advance_slot(&mut state, policy, config, &mut rng);
        out.aoci_sum += rec.aoci as u64;
        out.updates += u64::from(rec.scheduled);
        out.deliveries += u64::from(rec.delivered);
        if let Some(trace) = out.trace.as_mut() {
            trace.push(rec);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean AoCI per slot.
    pub avg_aoci: f64,
    /// Mean of `a ω C` per slot.
    pub avg_update_cost: f64,
    /// `avg_aoci + avg_update_cost`.
    pub total_avg_cost: f64,
    /// Fraction of slots with an update attempt.
    pub update_rate: f64,
    /// Standard error of the total cost across replications.
    pub std_error: f64,
    /// 95% normal-approximation half-width of the total cost.
    pub half_width: f64,
    pub runs: usize,
    pub slots: u64,
}

/// Aggregates replications. Everything is computed from integer tallies,
/// so the result does not depend on the order of `reps`.
pub fn aggregate(reps: &[Replication], weighted_cost: f64) -> Metrics {
    let n = reps.len();
    let slots = reps.first().map_or(0, |r| r.slots);
    let (mut a, mut u, mut aa, mut au, mut uu) = (0u128, 0u128, 0u128, 0u128, 0u128);
    for r in reps {
        let (ra, ru) = (r.aoci_sum as u128, r.updates as u128);
        a += ra;
        u += ru;
        aa += ra * ra;
        au += ra * ru;
        uu += ru * ru;
    }
    let total_slots = (n as u64 * slots) as f64;
    let avg_aoci = a as f64 / total_slots;
    let avg_update_cost = u as f64 * weighted_cost / total_slots;
    let update_rate = u as f64 / total_slots;
    let std_error = if n > 1 {
        // Sample variance of per-run totals A_r + ωC U_r, in exact integer moments.
        let nf = n as f64;
        let var_a = (aa as f64 - (a as f64).powi(2) / nf) / (nf - 1.0);
        let cov = (au as f64 - a as f64 * u as f64 / nf) / (nf - 1.0);
        let var_u = (uu as f64 - (u as f64).powi(2) / nf) / (nf - 1.0);
        let var_total = (var_a + 2.0 * weighted_cost * cov + weighted_cost.powi(2) * var_u).max(0.0);
        (var_total / nf).sqrt() / slots as f64
    } else {
        0.0
    };
    Metrics {
        avg_aoci,
        avg_update_cost,
        total_avg_cost: avg_aoci + avg_update_cost,
        update_rate,
        std_error,
        half_width: 1.96 * std_error,
        runs: n,
        slots,
    }
}

/// Runs `config.runs` replications in parallel and aggregates them.
pub fn run_monte_carlo(policy: &SchedulePolicy, config: &SimConfig) -> Result<Metrics> {
    config.validate()?;
    policy.validate(&config.mdp_spec())?;
    let reps = (0..config.runs)
        .into_par_iter()
        .map(|run| run_replication(policy, config, run, false))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&reps, config.mdp_spec().weighted_update_cost()))
}

/// Checks a trace against the slot dynamics; returns the first bad slot.
pub fn validate_trace(trace: &[SlotRecord], aoci_cap: u32, aoi_cap: u32) -> std::result::Result<(), String> {
    for (i, r) in trace.iter().enumerate() {
        if r.delivered && !r.scheduled {
            return Err(format!("slot {}: delivered without being scheduled", r.t));
        }
        if r.changed && !r.delivered {
            return Err(format!("slot {}: change flagged without a delivery", r.t));
        }
        if r.aoci < r.aoi {
            return Err(format!("slot {}: AoCI {} below AoI {}", r.t, r.aoci, r.aoi));
        }
        if let Some(next) = trace.get(i + 1) {
            let aoci = if r.changed { 1 } else { (r.aoci + 1).min(aoci_cap) };
            let aoi = if r.delivered { 1 } else { (r.aoi + 1).min(aoi_cap) };
            if (next.aoci, next.aoi) != (aoci, aoi) {
                return Err(format!(
                    "slot {}: ages ({}, {}) do not follow from ({}, {})",
                    next.t, next.aoci, next.aoi, r.aoci, r.aoi
                ));
            }
        }
    }
    Ok(())
}

pub fn trace_csv(trace: &[SlotRecord], provenance: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(provenance, &["t", "a", "d", "c", "delta", "aoci"]);
    for r in trace {
        t.push_row([
            r.t.to_string(),
            u8::from(r.scheduled).to_string(),
            u8::from(r.delivered).to_string(),
            u8::from(r.changed).to_string(),
            r.aoi.to_string(),
            r.aoci.to_string(),
        ]);
    }
    t
}

/// Header of the metrics CSV (one row per policy and parameter point).
pub const METRICS_HEADER: [&str; 12] = [
    "policy",
    "p_tx",
    "q",
    "omega",
    "C",
    "avg_aoci",
    "avg_update_cost",
    "total_cost",
    "total_cost_ci95",
    "update_rate",
    "runs",
    "slots",
];

pub fn metrics_row(policy: &str, config: &SimConfig, m: &Metrics) -> Vec<String> {
    vec![
        policy.to_string(),
        fmt_f64(config.delivery.p_tx()),
        fmt_f64(config.content_q),
        fmt_f64(config.weight),
        fmt_f64(config.update_cost),
        fmt_f64(m.avg_aoci),
        fmt_f64(m.avg_update_cost),
        fmt_f64(m.total_avg_cost),
        fmt_f64(m.half_width),
        fmt_f64(m.update_rate),
        m.runs.to_string(),
        m.slots.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p_tx: f64, q: f64) -> SimConfig {
        SimConfig {
            content_q: q,
            delivery: DeliveryModel::Fixed { p_tx },
            runs: 20,
            horizon: 500,
            ..SimConfig::default()
        }
    }

    #[test]
    fn slot_branches() {
        let cfg = config(1.0, 1.0);
        let mut rng = replication_rng(1, 0);
        // q = 1: the PT flips every slot, so a delivered update always changes content.
        let mut state = PairState::new(1.0).unwrap();
        state.aoci = 5;
        state.aoi = 3;
        let rec = advance_slot(&mut state, &SchedulePolicy::ZeroWait, &cfg, &mut rng);
        assert!(rec.delivered && rec.changed);
        assert_eq!(state.ages(), AociState::new(1, 1));

        // q = 0: delivered but unchanged.
        let cfg0 = config(1.0, 0.0);
        let mut state = PairState::new(0.0).unwrap();
        state.aoci = 5;
        state.aoi = 3;
        let rec = advance_slot(&mut state, &SchedulePolicy::ZeroWait, &cfg0, &mut rng);
        assert!(rec.delivered && !rec.changed);
        assert_eq!(state.ages(), AociState::new(6, 1));

        // Idle ages both counters.
        let rec = advance_slot(&mut state, &SchedulePolicy::Idle, &cfg0, &mut rng);
        assert!(!rec.scheduled);
        assert_eq!(state.ages(), AociState::new(7, 2));
    }

    #[test]
    fn idle_policy_pays_nothing() {
        let m = run_monte_carlo(&SchedulePolicy::Idle, &config(0.8, 0.3)).unwrap();
        assert_eq!(m.avg_update_cost, 0.0);
        assert_eq!(m.update_rate, 0.0);
    }

    #[test]
    fn zero_wait_with_certain_change_is_deterministic() {
        let cfg = config(1.0, 1.0);
        let m = run_monte_carlo(&SchedulePolicy::ZeroWait, &cfg).unwrap();
        assert_eq!(m.avg_aoci, 1.0);
        assert_eq!(m.total_avg_cost, 13.0);
        assert_eq!(m.std_error, 0.0);
    }

    #[test]
    fn traces_are_legal_and_reproducible() {
        let cfg = config(0.7, 0.2);
        let policy = SchedulePolicy::Thresholds(vec![Some(4); 100]);
        let a = run_replication(&policy, &cfg, 3, true).unwrap();
        let b = run_replication(&policy, &cfg, 3, true).unwrap();
        assert_eq!(a, b);
        validate_trace(a.trace.as_ref().unwrap(), cfg.aoci_cap, cfg.aoi_cap).unwrap();
        let sac = run_replication(&SchedulePolicy::SampleAtChange, &cfg, 3, true).unwrap();
        validate_trace(sac.trace.as_ref().unwrap(), cfg.aoci_cap, cfg.aoi_cap).unwrap();
    }

    #[test]
    fn validator_rejects_illegal_steps() {
        let ok = SlotRecord { t: 0, scheduled: true, delivered: true, changed: false, aoi: 2, aoci: 4 };
        let bad_next = SlotRecord { t: 1, scheduled: false, delivered: false, changed: false, aoi: 1, aoci: 1 };
        assert!(validate_trace(&[ok, bad_next], 10, 10).is_err());
        let phantom = SlotRecord { scheduled: false, ..ok };
        assert!(validate_trace(&[phantom], 10, 10).is_err());
    }

    #[test]
    fn aggregation_ignores_order() {
        let cfg = config(0.8, 0.3);
        let policy = SchedulePolicy::Thresholds(vec![Some(6); 100]);
        let mut reps: Vec<_> = (0..cfg.runs).map(|r| run_replication(&policy, &cfg, r, false).unwrap()).collect();
        let forward = aggregate(&reps, 12.0);
        reps.reverse();
        reps.swap(3, 11);
        assert_eq!(aggregate(&reps, 12.0), forward);
        assert_eq!(forward.total_avg_cost, forward.avg_aoci + forward.avg_update_cost);
    }
}
