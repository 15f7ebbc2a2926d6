//! Brute-force ground truth for tiny state spaces.

use super::chain::long_run;
use super::model::{AociState, MdpSpec, PolicyTable};
use crate::error::{Error, Result};

/// Largest state space the enumeration accepts (2^16 policies).
pub const ENUMERATION_STATE_LIMIT: usize = 16;

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub gain: f64,
    pub policy: PolicyTable,
    /// Recurrent states of the optimal policy's chain from `(1, 1)`.
    pub recurrent: Vec<bool>,
    pub policies_evaluated: usize,
}

/// Evaluates every deterministic stationary policy from `(1, 1)` and keeps
/// the cheapest; among near-ties (1e-12) the first in bit order wins.
pub fn enumerate_policies_oracle(spec: &MdpSpec) -> Result<EnumerationResult> {
    spec.validate()?;
    let n = spec.num_states();
    if n > ENUMERATION_STATE_LIMIT {
        return Err(Error::OracleLimit(format!(
            "{n} states exceed the enumeration limit of {ENUMERATION_STATE_LIMIT}"
        )));
    }
    let mut best: Option<EnumerationResult> = None;
    let total = 1u64 << n;
    for bits in 0..total {
        let policy = PolicyTable::from_bits(spec, bits);
        let run = long_run(&policy, spec, AociState::ORIGIN)?;
        if best.as_ref().is_none_or(|b| run.gain < b.gain - 1e-12) {
            best = Some(EnumerationResult {
                gain: run.gain,
                policy,
                recurrent: run.recurrent,
                policies_evaluated: 0,
            });
        }
    }
    let mut best = best.expect("at least one policy");
    best.policies_evaluated = total as usize;
    Ok(best)
}
