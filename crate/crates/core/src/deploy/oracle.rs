use super::solution::DeploymentSolution;
use super::table::LatencyTable;
use crate::error::{Error, Result};
use crate::net_model::{LatencyParams, RadioParams, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_bs: usize,
    pub max_devices: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_bs: 4,
            max_devices: 6,
        }
    }
}

impl OracleLimits {
    pub fn admits(&self, topo: &Topology) -> bool {
        topo.num_bs() <= self.max_bs && topo.num_devices() <= self.max_devices
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solution: DeploymentSolution,
    pub objective: f64,
    pub candidates: usize,
    pub feasible: usize,
}

/// Scans every host subset and every association onto it, keeping the
/// feasible latency minimizer. Candidates are visited in lexicographic order
/// of (host mask, host index per device) and only a strictly better
/// objective replaces the incumbent.
pub fn exhaustive_oracle(
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
    limits: &OracleLimits,
) -> Result<OracleResult> {
    topo.validate(None)?;
    if !limits.admits(topo) {
        return Err(Error::OracleLimit(format!(
            "K = {}, B = {} exceed the oracle limits K <= {}, B <= {}",
            topo.num_devices(),
            topo.num_bs(),
            limits.max_devices,
            limits.max_bs
        )));
    }
    let table = LatencyTable::new(topo, lat, radio)?;
    let k_count = topo.num_devices();
    let b_count = topo.num_bs();
    let mut best: Option<(f64, u32, Vec<usize>)> = None;
    let (mut candidates, mut feasible) = (0, 0);
    for mask in 1u32..(1 << b_count) {
        let open: Vec<usize> = (0..b_count).filter(|&m| mask >> (b_count - 1 - m) & 1 == 1).collect();
        let base = open.len();
        for code in 0..base.pow(k_count as u32) {
            candidates += 1;
            // Device 0 is the most significant digit.
            let mut rest = code;
            let mut hosts = vec![0usize; k_count];
            for k in (0..k_count).rev() {
                hosts[k] = open[rest % base];
                rest /= base;
            }
            let mut loads = vec![0usize; b_count];
            for &m in &hosts {
                loads[m] += 1;
            }
            if (0..b_count).all(|m| loads[m] <= topo.server_dt_capacity[m]) {
                feasible += 1;
                let obj = table.objective(&hosts);
                if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
                    best = Some((obj, mask, hosts));
                }
            }
        }
    }
    let (objective, mask, hosts) = best.ok_or_else(|| Error::SolverFailure("no feasible deployment".into()))?;
    let flags = (0..b_count).map(|m| mask >> (b_count - 1 - m) & 1 == 1).collect();
    let access: Vec<usize> = hosts.iter().enumerate().map(|(k, &m)| table.access[k][m]).collect();
    Ok(OracleResult {
        solution: DeploymentSolution::from_indices(flags, &hosts, &access),
        objective,
        candidates,
        feasible,
    })
}
