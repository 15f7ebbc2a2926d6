//! Average-cost policy evaluation: gain θ and bias V with `V(s†) = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{AociState, MdpSpec, PolicyTable, SparseChain};
use super::multichain::closed_classes;
use crate::error::{Error, Result};

/// State spaces up to this size are solved by dense LU; larger ones by
/// relative-value sweeps over the sparse chain.
pub const DENSE_STATE_LIMIT: usize = 1024;

/// Self-loop weight of the lazy chain used by the sweeps. Mixing in the
/// identity makes every induced chain aperiodic without moving V.
const LAZINESS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EvalMethod {
    #[default]
    Auto,
    Dense,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub method: EvalMethod,
    pub reference: AociState,
    /// Target for `max_s |C(s) + Σ P V − V(s) − θ|`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            method: EvalMethod::Auto,
            reference: AociState::ORIGIN,
            tolerance: 1e-10,
            max_sweeps: 2_000_000,
        }
    }
}

/// Work counters for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalStats {
    pub dense: bool,
    pub sweeps: usize,
    /// Largest number of transition entries read in a single sweep.
    pub max_entries_per_sweep: usize,
    pub total_entries: usize,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub gain: f64,
    pub bias: Vec<f64>,
    /// Largest absolute residual of the evaluation equations.
    pub residual: f64,
    pub stats: EvalStats,
}

/// Solves `θ + V(s) = C(s, π(s)) + Σ P(s'|s, π(s)) V(s')` with `V(s†) = 0`.
pub fn evaluate_policy(policy: &PolicyTable, spec: &MdpSpec, reference: AociState) -> Result<Evaluation> {
    evaluate_policy_with(
        policy,
        spec,
        &EvalOptions {
            reference,
            ..EvalOptions::default()
        },
        None,
    )
}

/// As [`evaluate_policy`]; `warm_start` seeds the sweep solver.
pub fn evaluate_policy_with(
    policy: &PolicyTable,
    spec: &MdpSpec,
    opts: &EvalOptions,
    warm_start: Option<&[f64]>,
) -> Result<Evaluation> {
    spec.validate()?;
    if !policy.matches(spec) {
        return Err(Error::invalid("policy", "policy grid does not match the MDP caps"));
    }
    if !spec.contains(opts.reference) {
        return Err(Error::invalid("reference", format!("{:?} outside state space", opts.reference)));
    }
    let chain = SparseChain::build(policy, spec);
    let classes = closed_classes(&chain);
    if classes.len() > 1 {
        return Err(Error::SolverFailure(format!(
            "policy induces {} closed recurrent classes; use the multichain evaluator",
            classes.len()
        )));
    }
    let reference = spec.index(opts.reference);
    let dense = match opts.method {
        EvalMethod::Dense => true,
        EvalMethod::Sweep => false,
        EvalMethod::Auto => chain.num_states() <= DENSE_STATE_LIMIT,
    };
    if dense {
        solve_dense(&chain, reference, opts.tolerance)
    } else {
        solve_sweeps(&chain, reference, opts, warm_start)
    }
}

fn residual(chain: &SparseChain, gain: f64, bias: &[f64]) -> f64 {
    (0..chain.num_states())
        .map(|i| {
            let future: f64 = chain.row(i).map(|(j, p)| p * bias[j]).sum();
            (chain.cost(i) + future - bias[i] - gain).abs()
        })
        .fold(0.0, f64::max)
}

pub(crate) fn solve_dense(chain: &SparseChain, reference: usize, tolerance: f64) -> Result<Evaluation> {
    let n = chain.num_states();
    // Unknown vector: V(s) for s != s†, with the s† slot carrying θ.
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        rhs[i] = chain.cost(i);
        a[(i, reference)] += 1.0;
        if i != reference {
            a[(i, i)] += 1.0;
        }
        for (j, p) in chain.row(i) {
            if j != reference {
                a[(i, j)] -= p;
            }
        }
    }
    let x = a.lu().solve(&rhs).ok_or_else(|| {
        Error::SolverFailure(format!(
            "singular evaluation system ({n} states); the policy likely induces more than one recurrent class"
        ))
    })?;
    let gain = x[reference];
    let mut bias: Vec<f64> = x.iter().copied().collect();
    bias[reference] = 0.0;
    let res = residual(chain, gain, &bias);
    if !res.is_finite() || res > tolerance.max(1e-9) * (1.0 + gain.abs()) * 1e3 {
        return Err(Error::SolverFailure(format!(
            "ill-conditioned evaluation system ({n} states): residual {res:e}"
        )));
    }
    Ok(Evaluation {
        gain,
        bias,
        residual: res,
        stats: EvalStats {
            dense: true,
            ..EvalStats::default()
        },
    })
}

/// Relative value sweeps `h ← T h − (T h)(s†)` on the lazy chain. Each sweep
/// reads every stored transition entry exactly once.
pub(crate) fn solve_sweeps(
    chain: &SparseChain,
    reference: usize,
    opts: &EvalOptions,
    warm_start: Option<&[f64]>,
) -> Result<Evaluation> {
    let n = chain.num_states();
    let mut h = match warm_start {
        Some(v) if v.len() == n => v.to_vec(),
        _ => vec![0.0; n],
    };
    let shift = h[reference];
    h.iter_mut().for_each(|v| *v -= shift);
    let mut next = vec![0.0; n];
    let mut stats = EvalStats::default();
    let stop = opts.tolerance * (1.0 - LAZINESS);
    for sweep in 1..=opts.max_sweeps {
        let mut entries = 0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut future = 0.0;
            for (j, p) in chain.row(i) {
                future += p * h[j];
                entries += 1;
            }
            let t = (1.0 - LAZINESS) * (chain.cost(i) + future) + LAZINESS * h[i];
            let d = t - h[i];
            lo = lo.min(d);
            hi = hi.max(d);
            next[i] = t;
        }
        stats.sweeps = sweep;
        stats.total_entries += entries;
        stats.max_entries_per_sweep = stats.max_entries_per_sweep.max(entries);
        let lazy_gain = next[reference] - h[reference];
        let base = next[reference];
        for (dst, &src) in h.iter_mut().zip(&next) {
            *dst = src - base;
        }
        if hi - lo <= stop {
            let gain = lazy_gain / (1.0 - LAZINESS);
            let res = residual(chain, gain, &h);
            return Ok(Evaluation {
                gain,
                bias: h,
                residual: res,
                stats,
            });
        }
        if !(hi - lo).is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: stats.sweeps,
        context: "relative-value sweeps for policy evaluation".into(),
    })
}
