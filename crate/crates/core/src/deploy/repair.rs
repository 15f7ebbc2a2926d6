use super::solution::DeploymentSolution;
use super::table::LatencyTable;
use crate::error::{Error, Result};
use crate::net_model::{LatencyParams, RadioParams, Topology};

/// Turns an arbitrary (possibly infeasible) action into a feasible solution.
///
/// 1. No host at all: the BS with the largest DT capacity hosts.
/// 2. Hosts too small for K DTs: open further BSs by descending capacity.
/// 3. Rows that are not one-hot or point at a non-host become unassigned.
/// 4. Over-full servers evict their highest-latency DTs.
/// 5. Unassigned devices go, in index order, to the nearest host with slack.
///
/// Valid access rows are kept; others get the best access BS for the host.
pub fn repair_action(
    raw: &DeploymentSolution,
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
) -> Result<DeploymentSolution> {
    let table = LatencyTable::new(topo, lat, radio)?;
    repair_with_table(raw, topo, &table)
}

pub(crate) fn repair_with_table(
    raw: &DeploymentSolution,
    topo: &Topology,
    table: &LatencyTable,
) -> Result<DeploymentSolution> {
    let k_count = topo.num_devices();
    let b_count = topo.num_bs();
    let total_capacity: usize = topo.server_dt_capacity.iter().sum();
    if total_capacity < k_count {
        return Err(Error::invalid(
            "server_dt_capacity",
            format!("total capacity {total_capacity} cannot hold {k_count} DTs"),
        ));
    }
    let mut hosts: Vec<bool> = (0..b_count).map(|m| raw.host_flags.get(m).copied().unwrap_or(false)).collect();
    let mut by_capacity: Vec<usize> = (0..b_count).collect();
    by_capacity.sort_by_key(|&m| (std::cmp::Reverse(topo.server_dt_capacity[m]), m));
    let hosted_capacity = |hosts: &[bool]| -> usize { (0..b_count).filter(|&m| hosts[m]).map(|m| topo.server_dt_capacity[m]).sum() };
    for &m in &by_capacity {
        if hosts.iter().any(|&h| h) && hosted_capacity(&hosts) >= k_count {
            break;
        }
        hosts[m] = true;
    }

    let mut assign: Vec<Option<usize>> = (0..k_count)
        .map(|k| {
            let row = raw.association.get(k)?;
            if row.len() != b_count || row.iter().filter(|&&v| v).count() != 1 {
                return None;
            }
            row.iter().position(|&v| v).filter(|&m| hosts[m])
        })
        .collect();

    let mut loads = vec![0usize; b_count];
    for m in assign.iter().flatten() {
        loads[*m] += 1;
    }
    for m in 0..b_count {
        let cap = topo.server_dt_capacity[m];
        if loads[m] <= cap {
            continue;
        }
        let mut members: Vec<usize> = (0..k_count).filter(|&k| assign[k] == Some(m)).collect();
        members.sort_by(|&a, &b| {
            table
                .pair(b, m, loads[m])
                .total_cmp(&table.pair(a, m, loads[m]))
                .then(a.cmp(&b))
        });
        for &k in members.iter().take(loads[m] - cap) {
            assign[k] = None;
        }
        loads[m] = cap;
    }

    for k in 0..k_count {
        if assign[k].is_some() {
            continue;
        }
        let m = (0..b_count)
            .filter(|&m| hosts[m] && loads[m] < topo.server_dt_capacity[m])
            .min_by(|&a, &b| {
                topo.device_bs_distance(k, a)
                    .total_cmp(&topo.device_bs_distance(k, b))
                    .then(a.cmp(&b))
            })
            .expect("hosted capacity covers every device");
        assign[k] = Some(m);
        loads[m] += 1;
    }

    let hosts_of: Vec<usize> = assign.into_iter().map(|m| m.expect("all assigned")).collect();
    let access: Vec<usize> = (0..k_count)
        .map(|k| match raw.access_assoc.get(k) {
            Some(row) if row.len() == b_count && row.iter().filter(|&&v| v).count() == 1 => {
                row.iter().position(|&v| v).expect("one-hot")
            }
            _ => table.access[k][hosts_of[k]],
        })
        .collect();
    Ok(DeploymentSolution::from_indices(hosts, &hosts_of, &access))
}
