use rand::Rng;

use super::repair::repair_with_table;
use super::solution::{check_feasible, DeploymentSolution};
use super::table::LatencyTable;
use crate::error::Result;
use crate::net_model::{LatencyParams, RadioParams, Topology};

/// Draws tried before the random baseline falls back to repair.
pub const RANDOM_MAX_DRAWS: usize = 100;

/// Every BS hosts; devices, in index order, take the nearest BS that still
/// has room.
pub fn nearest_baseline(topo: &Topology, lat: &LatencyParams, radio: &RadioParams) -> Result<DeploymentSolution> {
    let table = LatencyTable::new(topo, lat, radio)?;
    let b_count = topo.num_bs();
    let mut loads = vec![0usize; b_count];
    let mut hosts = Vec::with_capacity(topo.num_devices());
    for k in 0..topo.num_devices() {
        let mut order: Vec<usize> = (0..b_count).collect();
        order.sort_by(|&a, &b| {
            topo.device_bs_distance(k, a)
                .total_cmp(&topo.device_bs_distance(k, b))
                .then(a.cmp(&b))
        });
        let m = order
            .into_iter()
            .find(|&m| loads[m] < topo.server_dt_capacity[m])
            .ok_or_else(|| crate::error::Error::invalid("server_dt_capacity", "total capacity below K"))?;
        loads[m] += 1;
        hosts.push(m);
    }
    let access: Vec<usize> = hosts.iter().enumerate().map(|(k, &m)| table.access[k][m]).collect();
    Ok(DeploymentSolution::from_indices(vec![true; b_count], &hosts, &access))
}

/// Uniform host set and uniform association among the hosts, redrawn until
/// feasible (at most [`RANDOM_MAX_DRAWS`] times), then repaired.
pub fn random_baseline<R: Rng + ?Sized>(
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
    rng: &mut R,
) -> Result<DeploymentSolution> {
    let table = LatencyTable::new(topo, lat, radio)?;
    let b_count = topo.num_bs();
    let mut last = None;
    for _ in 0..RANDOM_MAX_DRAWS {
        let flags: Vec<bool> = (0..b_count).map(|_| rng.random_bool(0.5)).collect();
        let open: Vec<usize> = (0..b_count).filter(|&m| flags[m]).collect();
        if open.is_empty() {
            continue;
        }
        let hosts: Vec<usize> = (0..topo.num_devices()).map(|_| open[rng.random_range(0..open.len())]).collect();
        let access: Vec<usize> = hosts.iter().enumerate().map(|(k, &m)| table.access[k][m]).collect();
        let sol = DeploymentSolution::from_indices(flags, &hosts, &access);
        if check_feasible(&sol, topo).is_ok() {
            return Ok(sol);
        }
        last = Some(sol);
    }
    let raw = last.unwrap_or_else(|| DeploymentSolution {
        host_flags: vec![false; b_count],
        association: vec![vec![false; b_count]; topo.num_devices()],
        access_assoc: vec![vec![false; b_count]; topo.num_devices()],
    });
    let mut repaired = repair_with_table(&raw, topo, &table)?;
    // Access follows the (possibly moved) host.
    for k in 0..topo.num_devices() {
        let m = repaired.host_of(k).expect("repaired rows are one-hot");
        repaired.access_assoc[k] = (0..b_count).map(|b| b == table.access[k][m]).collect();
    }
    Ok(repaired)
}
