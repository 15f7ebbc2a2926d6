//! Relative policy iteration with the Δ-threshold shortcut, plus relative
//! value iteration as an independent solver.

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_policy_with, EvalOptions, EvalStats};
use super::model::{stage_cost, transitions, AociState, MdpSpec, PolicyTable, SparseChain};
use super::multichain::{closed_classes, evaluate_multichain};
use crate::error::{Error, Result};

/// Relative tolerance under which the two actions count as tied.
const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    /// θ, the optimal long-run average cost per slot.
    pub gain: f64,
    /// V(s) per state index, anchored at `V(s†) = 0`.
    pub bias: Vec<f64>,
    pub policy: PolicyTable,
    pub iterations: usize,
    /// Gain of every evaluated policy, in order.
    pub gain_history: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    /// States decided by the threshold shortcut, summed over iterations.
    pub shortcut_hits: usize,
    /// Shortcut decisions that disagreed with the full one-step argmin.
    pub shortcut_mismatches: usize,
    /// Largest transition-entry count of any single evaluation sweep.
    pub max_entries_per_sweep: usize,
    pub dense_evaluations: usize,
    pub sweep_evaluations: usize,
    /// Evaluations of policies with more than one closed class.
    pub multichain_evaluations: usize,
}

impl SolveStats {
    fn absorb(&mut self, eval: &EvalStats) {
        if eval.dense {
            self.dense_evaluations += 1;
        } else {
            self.sweep_evaluations += 1;
        }
        self.max_entries_per_sweep = self.max_entries_per_sweep.max(eval.max_entries_per_sweep);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpiOptions {
    pub eval: EvalOptions,
    pub max_iterations: usize,
    /// Apply the Δ-threshold shortcut before the generic argmin.
    pub use_shortcut: bool,
}

impl Default for RpiOptions {
    fn default() -> Self {
        RpiOptions {
            eval: EvalOptions::default(),
            max_iterations: 1000,
            use_shortcut: true,
        }
    }
}

/// Smallest Δ with `p_tx (1 − p_r(δ)) Δ − p_tx δ − ω C ≥ 0`, or `None` when
/// no such Δ exists within the AoCI cap.
pub fn threshold_for(aoi: u32, spec: &MdpSpec) -> Option<u32> {
    threshold_from_return_prob(spec.return_prob(aoi), aoi, spec.p_tx, spec.weighted_update_cost(), spec.aoci_cap)
}

/// [`threshold_for`] with the return probability supplied directly.
pub fn threshold_from_return_prob(
    p_return: f64,
    aoi: u32,
    p_tx: f64,
    weighted_cost: f64,
    aoci_cap: u32,
) -> Option<u32> {
    let slope = p_tx * (1.0 - p_return);
    if slope <= 0.0 {
        return None;
    }
    let holds = |aoci: u32| slope * aoci as f64 - p_tx * aoi as f64 - weighted_cost >= 0.0;
    let estimate = ((p_tx * aoi as f64 + weighted_cost) / slope).ceil();
    if !estimate.is_finite() || estimate > aoci_cap as f64 + 1.0 {
        return None;
    }
    // Walk off any rounding error in the closed-form estimate.
    let mut aoci = (estimate.max(1.0) as u32).max(1);
    while aoci > 1 && holds(aoci - 1) {
        aoci -= 1;
    }
    while !holds(aoci) {
        aoci += 1;
        if aoci > aoci_cap {
            return None;
        }
    }
    (aoci <= aoci_cap).then_some(aoci)
}

/// `C(s, a) + Σ P(s'|s, a) V(s')`.
fn q_value(s: AociState, action: bool, spec: &MdpSpec, bias: &[f64]) -> f64 {
    stage_cost(s, action, spec)
        + transitions(s, action, spec)
            .iter()
            .map(|&(next, p)| p * bias[spec.index(next)])
            .sum::<f64>()
}

/// Greedy action. Near-ties keep `current` when given, else go to idling.
fn argmin_action(s: AociState, spec: &MdpSpec, bias: &[f64], current: Option<bool>) -> bool {
    let idle = q_value(s, false, spec, bias);
    let update = q_value(s, true, spec, bias);
    let tol = TIE_TOLERANCE * idle.abs().max(update.abs()).max(1.0);
    if (update - idle).abs() <= tol {
        current.unwrap_or(false)
    } else {
        update < idle
    }
}

/// Both shortcut conditions: the premise on V and the threshold
/// inequality. A non-positive `V(Δ+1, 1) − V(1, 1)` fails the premise.
fn shortcut_fires(s: AociState, spec: &MdpSpec, bias: &[f64]) -> bool {
    let up = AociState::new((s.aoci + 1).min(spec.aoci_cap), 1);
    let gap = bias[spec.index(up)] - bias[spec.index(AociState::ORIGIN)];
    if !(gap > 0.0) {
        return false;
    }
    let premise = spec.return_prob(1) - spec.return_prob(s.aoi + 1) <= s.aoi as f64 / gap;
    let p_tx = spec.p_tx;
    let inequality = p_tx * (1.0 - spec.return_prob(s.aoi)) * s.aoci as f64
        - p_tx * s.aoi as f64
        - spec.weighted_update_cost()
        >= 0.0;
    premise && inequality
}

/// One improvement step. Shortcut decisions are cross-checked against the
/// generic argmin and disagreements counted in `stats`. Ties keep the
/// action of `current` when given.
pub fn improve_policy(
    bias: &[f64],
    spec: &MdpSpec,
    current: Option<&PolicyTable>,
    use_shortcut: bool,
    stats: &mut SolveStats,
) -> PolicyTable {
    PolicyTable::from_fn(spec, |s| {
        let greedy = argmin_action(s, spec, bias, current.map(|p| p.action(s)));
        if use_shortcut && shortcut_fires(s, spec, bias) {
            stats.shortcut_hits += 1;
            if !greedy {
                stats.shortcut_mismatches += 1;
            }
            true
        } else {
            greedy
        }
    })
}

fn expected(s: AociState, action: bool, spec: &MdpSpec, values: &[f64]) -> f64 {
    transitions(s, action, spec).iter().map(|&(next, p)| p * values[spec.index(next)]).sum()
}

/// Multichain improvement: first on the gain vector, then (where the gain
/// cannot improve) on the bias among gain-optimal actions. Returns the
/// current policy unchanged only at optimality.
fn improve_multichain(current: &PolicyTable, gains: &[f64], bias: &[f64], spec: &MdpSpec) -> PolicyTable {
    let tol = |a: f64, b: f64| TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0);
    let by_gain = PolicyTable::from_fn(spec, |s| {
        let cur = current.action(s);
        let (g_cur, g_alt) = (expected(s, cur, spec, gains), expected(s, !cur, spec, gains));
        if g_alt < g_cur - tol(g_cur, g_alt) {
            !cur
        } else {
            cur
        }
    });
    if by_gain != *current {
        return by_gain;
    }
    PolicyTable::from_fn(spec, |s| {
        let cur = current.action(s);
        let (g_cur, g_alt) = (expected(s, cur, spec, gains), expected(s, !cur, spec, gains));
        if (g_alt - g_cur).abs() > tol(g_cur, g_alt) {
            return cur;
        }
        let (v_cur, v_alt) = (q_value(s, cur, spec, bias), q_value(s, !cur, spec, bias));
        if v_alt < v_cur - tol(v_cur, v_alt) {
            !cur
        } else {
            cur
        }
    })
}

/// Relative policy iteration from the all-idle policy.
pub fn relative_policy_iteration(spec: &MdpSpec) -> Result<SolveResult> {
    relative_policy_iteration_with(spec, &RpiOptions::default())
}

pub fn relative_policy_iteration_with(spec: &MdpSpec, opts: &RpiOptions) -> Result<SolveResult> {
    spec.validate()?;
    let mut stats = SolveStats::default();
    let mut policy = PolicyTable::idle(spec);
    let mut gain_history = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let reference = spec.index(opts.eval.reference);
    for iteration in 1..=opts.max_iterations {
        let chain = SparseChain::build(&policy, spec);
        let (gain, bias, next) = if closed_classes(&chain).len() > 1 {
            let eval = evaluate_multichain(&chain, reference, &opts.eval)?;
            stats.absorb(&eval.stats);
            stats.multichain_evaluations += 1;
            let next = improve_multichain(&policy, &eval.gains, &eval.bias, spec);
            (eval.gains[reference], eval.bias, next)
        } else {
            let eval = evaluate_policy_with(&policy, spec, &opts.eval, warm.as_deref())?;
            stats.absorb(&eval.stats);
            let next = improve_policy(&eval.bias, spec, Some(&policy), opts.use_shortcut, &mut stats);
            (eval.gain, eval.bias, next)
        };
        gain_history.push(gain);
        if next == policy {
            return Ok(SolveResult {
                gain,
                bias,
                policy,
                iterations: iteration,
                gain_history,
                stats,
            });
        }
        policy = next;
        warm = Some(bias);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        context: "relative policy iteration".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RviOptions {
    /// Stop once the span of `T h − h` drops below this.
    pub span_tolerance: f64,
    pub max_iterations: usize,
    pub reference: AociState,
}

impl Default for RviOptions {
    fn default() -> Self {
        RviOptions {
            span_tolerance: 1e-11,
            max_iterations: 5_000_000,
            reference: AociState::ORIGIN,
        }
    }
}

/// Relative value iteration on the lazy (aperiodic) transform of the MDP.
pub fn relative_value_iteration(spec: &MdpSpec) -> Result<SolveResult> {
    relative_value_iteration_with(spec, &RviOptions::default())
}

pub fn relative_value_iteration_with(spec: &MdpSpec, opts: &RviOptions) -> Result<SolveResult> {
    const LAZY: f64 = 0.5;
    spec.validate()?;
    let n = spec.num_states();
    let reference = spec.index(opts.reference);
    let states: Vec<AociState> = spec.states().collect();
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    for iteration in 1..=opts.max_iterations {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &s) in states.iter().enumerate() {
            let best = q_value(s, false, spec, &h).min(q_value(s, true, spec, &h));
            let t = (1.0 - LAZY) * best + LAZY * h[i];
            lo = lo.min(t - h[i]);
            hi = hi.max(t - h[i]);
            next[i] = t;
        }
        let base = next[reference];
        for (dst, &src) in h.iter_mut().zip(&next) {
            *dst = src - base;
        }
        if hi - lo <= opts.span_tolerance * (1.0 - LAZY) {
            let gain = 0.5 * (lo + hi) / (1.0 - LAZY);
            let policy = PolicyTable::from_fn(spec, |s| argmin_action(s, spec, &h, None));
            return Ok(SolveResult {
                gain,
                bias: h,
                policy,
                iterations: iteration,
                gain_history: vec![gain],
                stats: SolveStats::default(),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        context: "relative value iteration".into(),
    })
}
