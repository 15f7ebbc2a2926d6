use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_probability, Error, Result};
use crate::state_process::return_probability_unchecked;

/// MDP state `(Δ, δ)`: age of changed information and age of information,
/// both counted in slots starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AociState {
    pub aoci: u32,
    pub aoi: u32,
}

impl AociState {
    pub const ORIGIN: AociState = AociState { aoci: 1, aoi: 1 };

    pub fn new(aoci: u32, aoi: u32) -> Self {
        AociState { aoci, aoi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    /// Δ̂, the largest representable AoCI.
    pub aoci_cap: u32,
    /// δ̂, the largest representable AoI.
    pub aoi_cap: u32,
    /// Per-attempt delivery success probability.
    pub p_tx: f64,
    /// Per-slot flip probability of the content chain.
    pub content_q: f64,
    /// Update cost C.
    pub update_cost: f64,
    /// Weight ω on the update cost.
    pub weight: f64,
}

impl MdpSpec {
    pub fn new(cap: u32, p_tx: f64, content_q: f64, update_cost: f64, weight: f64) -> Result<Self> {
        let spec = MdpSpec {
            aoci_cap: cap,
            aoi_cap: cap,
            p_tx,
            content_q,
            update_cost,
            weight,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.aoi_cap == 0 {
            return Err(Error::invalid("aoi_cap", "must be >= 1"));
        }
        if self.aoci_cap < self.aoi_cap {
            return Err(Error::invalid(
                "aoci_cap",
                format!("must be >= aoi_cap ({}), got {}", self.aoi_cap, self.aoci_cap),
            ));
        }
        ensure_probability("p_tx", self.p_tx)?;
        ensure_probability("content_q", self.content_q)?;
        if !(self.update_cost >= 0.0 && self.update_cost.is_finite()) {
            return Err(Error::invalid("update_cost", format!("must be >= 0, got {}", self.update_cost)));
        }
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::invalid("weight", format!("must be >= 0, got {}", self.weight)));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.aoci_cap as usize * self.aoi_cap as usize
    }

    /// ωC, the cost charged for one update attempt.
    pub fn weighted_update_cost(&self) -> f64 {
        self.weight * self.update_cost
    }

    /// p_r(δ), the δ-slot return probability of the content chain.
    pub fn return_prob(&self, aoi: u32) -> f64 {
        return_probability_unchecked(self.content_q, aoi)
    }

    pub fn index(&self, s: AociState) -> usize {
        debug_assert!(self.contains(s), "{s:?} outside state space");
        (s.aoci as usize - 1) * self.aoi_cap as usize + (s.aoi as usize - 1)
    }

    pub fn state(&self, index: usize) -> AociState {
        let cols = self.aoi_cap as usize;
        AociState {
            aoci: (index / cols) as u32 + 1,
            aoi: (index % cols) as u32 + 1,
        }
    }

    pub fn contains(&self, s: AociState) -> bool {
        (1..=self.aoci_cap).contains(&s.aoci) && (1..=self.aoi_cap).contains(&s.aoi)
    }

    pub fn states(&self) -> impl Iterator<Item = AociState> + '_ {
        (0..self.num_states()).map(|i| self.state(i))
    }

    fn bump_aoci(&self, aoci: u32) -> u32 {
        (aoci + 1).min(self.aoci_cap)
    }

    fn bump_aoi(&self, aoi: u32) -> u32 {
        (aoi + 1).min(self.aoi_cap)
    }
}

/// Up to three weighted successors of one `(state, action)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successors {
    entries: [(AociState, f64); 3],
    len: usize,
}

impl Successors {
    fn new() -> Self {
        Successors {
            entries: [(AociState::ORIGIN, 0.0); 3],
            len: 0,
        }
    }

    /// Adds an outcome, merging coincident states and dropping zero mass.
    fn push(&mut self, state: AociState, prob: f64) {
        if prob <= 0.0 {
            return;
        }
        if let Some(e) = self.entries[..self.len].iter_mut().find(|e| e.0 == state) {
            e.1 += prob;
            return;
        }
        self.entries[self.len] = (state, prob);
        self.len += 1;
    }
}

impl Deref for Successors {
    type Target = [(AociState, f64)];

    fn deref(&self) -> &Self::Target {
        &self.entries[..self.len]
    }
}

/// One-slot transition law.
///
/// Idling ages both counters. Updating succeeds with `p_tx`; a successful
/// update resets AoI and, if the content changed since the last delivery
/// (probability `1 - p_r(δ)`), also resets AoCI. Both ages saturate at
/// their caps.
pub fn transitions(s: AociState, action: bool, spec: &MdpSpec) -> Successors {
    let mut out = Successors::new();
    let aged = AociState::new(spec.bump_aoci(s.aoci), spec.bump_aoi(s.aoi));
    if !action {
        out.push(aged, 1.0);
        return out;
    }
    let p_same = spec.return_prob(s.aoi);
    out.push(AociState::ORIGIN, spec.p_tx * (1.0 - p_same));
    out.push(AociState::new(spec.bump_aoci(s.aoci), 1), spec.p_tx * p_same);
    out.push(aged, 1.0 - spec.p_tx);
    out
}

/// `Δ + a ω C`.
pub fn stage_cost(s: AociState, action: bool, spec: &MdpSpec) -> f64 {
    let base = s.aoci as f64;
    if action {
        base + spec.weighted_update_cost()
    } else {
        base
    }
}

/// Deterministic stationary policy over the full `Δ̂ × δ̂` grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyTable {
    aoci_cap: u32,
    aoi_cap: u32,
    actions: Vec<bool>,
}

impl PolicyTable {
    pub fn constant(spec: &MdpSpec, action: bool) -> Self {
        PolicyTable {
            aoci_cap: spec.aoci_cap,
            aoi_cap: spec.aoi_cap,
            actions: vec![action; spec.num_states()],
        }
    }

    pub fn idle(spec: &MdpSpec) -> Self {
        Self::constant(spec, false)
    }

    /// Zero-wait: update in every slot.
    pub fn zero_wait(spec: &MdpSpec) -> Self {
        Self::constant(spec, true)
    }

    pub fn from_fn(spec: &MdpSpec, mut f: impl FnMut(AociState) -> bool) -> Self {
        PolicyTable {
            aoci_cap: spec.aoci_cap,
            aoi_cap: spec.aoi_cap,
            actions: spec.states().map(&mut f).collect(),
        }
    }

    /// Update iff `Δ ≥ Δ(δ)`; `None` thresholds never update.
    pub fn from_thresholds(spec: &MdpSpec, threshold: impl Fn(u32) -> Option<u32>) -> Self {
        Self::from_fn(spec, |s| threshold(s.aoi).is_some_and(|t| s.aoci >= t))
    }

    /// Decodes policy `bits` (bit `i` is the action of state index `i`).
    pub fn from_bits(spec: &MdpSpec, bits: u64) -> Self {
        PolicyTable {
            aoci_cap: spec.aoci_cap,
            aoi_cap: spec.aoi_cap,
            actions: (0..spec.num_states()).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn from_actions(spec: &MdpSpec, actions: Vec<bool>) -> Result<Self> {
        if actions.len() != spec.num_states() {
            return Err(Error::invalid(
                "policy",
                format!("expected {} actions, got {}", spec.num_states(), actions.len()),
            ));
        }
        Ok(PolicyTable {
            aoci_cap: spec.aoci_cap,
            aoi_cap: spec.aoi_cap,
            actions,
        })
    }

    pub fn aoci_cap(&self) -> u32 {
        self.aoci_cap
    }

    pub fn aoi_cap(&self) -> u32 {
        self.aoi_cap
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn matches(&self, spec: &MdpSpec) -> bool {
        self.aoci_cap == spec.aoci_cap && self.aoi_cap == spec.aoi_cap
    }

    pub fn actions(&self) -> &[bool] {
        &self.actions
    }

    pub fn action_at(&self, index: usize) -> bool {
        self.actions[index]
    }

    /// Action at `s`; states beyond the caps read the saturated entry.
    pub fn action(&self, s: AociState) -> bool {
        let aoci = s.aoci.clamp(1, self.aoci_cap) as usize;
        let aoi = s.aoi.clamp(1, self.aoi_cap) as usize;
        self.actions[(aoci - 1) * self.aoi_cap as usize + (aoi - 1)]
    }

    pub fn set(&mut self, s: AociState, action: bool) {
        let i = (s.aoci as usize - 1) * self.aoi_cap as usize + (s.aoi as usize - 1);
        self.actions[i] = action;
    }

    /// Smallest Δ at which the policy updates for the given δ.
    pub fn threshold(&self, aoi: u32) -> Option<u32> {
        (1..=self.aoci_cap).find(|&aoci| self.action(AociState::new(aoci, aoi)))
    }

    /// First `(Δ, δ)` where an update at Δ is followed by idling at a larger
    /// Δ, i.e. a witness that the policy is not a Δ-threshold rule.
    pub fn monotonicity_violation(&self) -> Option<AociState> {
        for aoi in 1..=self.aoi_cap {
            if let Some(t) = self.threshold(aoi) {
                if let Some(aoci) = (t..=self.aoci_cap).find(|&d| !self.action(AociState::new(d, aoi))) {
                    return Some(AociState::new(aoci, aoi));
                }
            }
        }
        None
    }

    pub fn update_count(&self) -> usize {
        self.actions.iter().filter(|&&a| a).count()
    }
}

/// Compressed row storage of the chain induced by one policy: every row
/// holds at most three entries.
#[derive(Debug, Clone)]
pub struct SparseChain {
    pub(crate) offsets: Vec<usize>,
    pub(crate) targets: Vec<usize>,
    pub(crate) probs: Vec<f64>,
    pub(crate) costs: Vec<f64>,
}

impl SparseChain {
    pub fn build(policy: &PolicyTable, spec: &MdpSpec) -> Self {
        let n = spec.num_states();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(3 * n);
        let mut probs = Vec::with_capacity(3 * n);
        let mut costs = Vec::with_capacity(n);
        offsets.push(0);
        for (i, s) in spec.states().enumerate() {
            let a = policy.action_at(i);
            for &(next, p) in transitions(s, a, spec).iter() {
                targets.push(spec.index(next));
                probs.push(p);
            }
            offsets.push(targets.len());
            costs.push(stage_cost(s, a, spec));
        }
        SparseChain {
            offsets,
            targets,
            probs,
            costs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.costs.len()
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().copied().zip(self.probs[r].iter().copied())
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i]
    }

    /// Sub-chain on `members` (sorted, closed under the transitions),
    /// re-indexed by position in `members`.
    pub(crate) fn restrict(&self, members: &[usize]) -> SparseChain {
        let mut offsets = Vec::with_capacity(members.len() + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for &i in members {
            for (j, p) in self.row(i) {
                let local = members.binary_search(&j).expect("restricted set must be closed");
                targets.push(local);
                probs.push(p);
            }
            offsets.push(targets.len());
        }
        SparseChain {
            offsets,
            targets,
            probs,
            costs: members.iter().map(|&i| self.costs[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(cap: u32, p_tx: f64, q: f64) -> MdpSpec {
        MdpSpec::new(cap, p_tx, q, 12.0, 1.0).unwrap()
    }

    fn lookup(succ: &Successors, s: AociState) -> f64 {
        succ.iter().filter(|e| e.0 == s).map(|e| e.1).sum()
    }

    #[test]
    fn idle_branch() {
        let sp = spec(10, 0.8, 0.3);
        let succ = transitions(AociState::new(3, 2), false, &sp);
        assert_eq!(&*succ, &[(AociState::new(4, 3), 1.0)]);
    }

    #[test]
    fn update_branches() {
        let sp = spec(10, 0.8, 0.3);
        let succ = transitions(AociState::new(3, 2), true, &sp);
        assert_eq!(succ.len(), 3);
        assert_relative_eq!(lookup(&succ, AociState::new(1, 1)), 0.336, epsilon = 1e-12);
        assert_relative_eq!(lookup(&succ, AociState::new(4, 1)), 0.464, epsilon = 1e-12);
        assert_relative_eq!(lookup(&succ, AociState::new(4, 3)), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn saturation_at_caps() {
        let sp = spec(5, 0.8, 0.3);
        let corner = AociState::new(5, 5);
        assert_eq!(&*transitions(corner, false, &sp), &[(corner, 1.0)]);
        let succ = transitions(corner, true, &sp);
        let p_same = sp.return_prob(5);
        assert_relative_eq!(lookup(&succ, AociState::new(5, 1)), 0.8 * p_same, epsilon = 1e-15);
        assert_relative_eq!(lookup(&succ, corner), 0.2, epsilon = 1e-15);
        // AoCI saturated, AoI still free to grow.
        let edge = AociState::new(5, 2);
        assert_eq!(&*transitions(edge, false, &sp), &[(AociState::new(5, 3), 1.0)]);
    }

    #[test]
    fn certain_delivery_drops_failure_branch() {
        let sp = spec(6, 1.0, 1.0);
        // q = 1: the content flips every slot, so after one slot it has changed.
        let succ = transitions(AociState::new(2, 1), true, &sp);
        assert_eq!(&*succ, &[(AociState::ORIGIN, 1.0)]);
    }

    #[test]
    fn single_state_space_merges_everything() {
        let sp = MdpSpec::new(1, 0.6, 0.3, 2.0, 1.0).unwrap();
        let succ = transitions(AociState::ORIGIN, true, &sp);
        assert_eq!(succ.len(), 1);
        assert_relative_eq!(succ[0].1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn stage_cost_examples() {
        let sp = MdpSpec::new(10, 0.8, 0.3, 12.0, 1.0).unwrap();
        assert_eq!(stage_cost(AociState::new(5, 2), false, &sp), 5.0);
        assert_eq!(stage_cost(AociState::new(5, 2), true, &sp), 17.0);
        let free = MdpSpec { weight: 0.0, ..sp };
        assert_eq!(stage_cost(AociState::ORIGIN, true, &free), 1.0);
    }

    #[test]
    fn index_round_trip() {
        let sp = MdpSpec {
            aoci_cap: 7,
            ..spec(4, 0.5, 0.2)
        };
        for i in 0..sp.num_states() {
            assert_eq!(sp.index(sp.state(i)), i);
        }
        assert_eq!(sp.index(AociState::ORIGIN), 0);
    }

    #[test]
    fn spec_validation() {
        assert!(MdpSpec::new(0, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(MdpSpec::new(4, 1.5, 0.5, 1.0, 1.0).is_err());
        assert!(MdpSpec::new(4, 0.5, 0.5, -1.0, 1.0).is_err());
        let lopsided = MdpSpec {
            aoci_cap: 3,
            aoi_cap: 4,
            ..spec(4, 0.5, 0.5)
        };
        assert!(lopsided.validate().is_err());
    }

    #[test]
    fn monotonicity_detection() {
        let sp = spec(4, 0.5, 0.3);
        let threshold = PolicyTable::from_thresholds(&sp, |aoi| Some(aoi + 1));
        assert_eq!(threshold.monotonicity_violation(), None);
        assert_eq!(threshold.threshold(2), Some(3));
        let mut broken = threshold.clone();
        broken.set(AociState::new(4, 1), false);
        assert_eq!(broken.monotonicity_violation(), Some(AociState::new(4, 1)));
    }
}
