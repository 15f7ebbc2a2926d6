use std::fmt;

use serde::{Deserialize, Serialize};

use crate::net_model::{average_interaction_latency, LatencyParams, RadioParams, Topology};
use crate::error::Result;

/// Placement and association decision for every device.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeploymentSolution {
    /// Whether BS `b` runs a DT server.
    pub host_flags: Vec<bool>,
    /// `association[k][m]`: the DT of device `k` lives on server `m`.
    pub association: Vec<Vec<bool>>,
    /// `access_assoc[k][b]`: device `k` reaches the network through BS `b`.
    pub access_assoc: Vec<Vec<bool>>,
}

impl DeploymentSolution {
    /// Builds a solution from per-device host and access indices.
    pub fn from_indices(host_flags: Vec<bool>, hosts: &[usize], access: &[usize]) -> Self {
        let b = host_flags.len();
        let one_hot = |idx: usize| (0..b).map(|j| j == idx).collect::<Vec<bool>>();
        DeploymentSolution {
            association: hosts.iter().map(|&m| one_hot(m)).collect(),
            access_assoc: access.iter().map(|&a| one_hot(a)).collect(),
            host_flags,
        }
    }

    pub fn num_devices(&self) -> usize {
        self.association.len()
    }

    pub fn num_bs(&self) -> usize {
        self.host_flags.len()
    }

    /// First server hosting the DT of device `k`.
    pub fn host_of(&self, k: usize) -> Option<usize> {
        self.association[k].iter().position(|&v| v)
    }

    pub fn access_of(&self, k: usize) -> Option<usize> {
        self.access_assoc[k].iter().position(|&v| v)
    }

    /// Hosted-DT count J_b per BS (column sums of the association).
    pub fn host_loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.num_bs()];
        for row in &self.association {
            for (m, &v) in row.iter().enumerate() {
                loads[m] += usize::from(v);
            }
        }
        loads
    }

    pub fn num_hosts(&self) -> usize {
        self.host_flags.iter().filter(|&&h| h).count()
    }

    /// Host index per device; `None` if any row is not one-hot.
    pub fn host_vector(&self) -> Option<Vec<usize>> {
        self.association
            .iter()
            .map(|row| (row.iter().filter(|&&v| v).count() == 1).then(|| row.iter().position(|&v| v)).flatten())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Matrix shapes disagree with the topology.
    Shape { what: &'static str },
    /// More DTs than the server can hold.
    Capacity { server: usize, load: usize, capacity: usize },
    /// A DT placed on a BS that does not host.
    NotHosting { device: usize, server: usize },
    /// A device with zero or several DT placements.
    Assignment { device: usize, count: usize },
    /// A device with zero or several access BSs.
    Access { device: usize, count: usize },
    /// Allocated compute exceeds the server capacity.
    Compute { server: usize, allocated: f64, capacity: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { what } => write!(f, "shape mismatch in {what}"),
            Violation::Capacity { server, load, capacity } => {
                write!(f, "capacity: server {server} hosts {load} DTs, capacity {capacity}")
            }
            Violation::NotHosting { device, server } => {
                write!(f, "hosting: device {device} placed on non-hosting BS {server}")
            }
            Violation::Assignment { device, count } => {
                write!(f, "assignment: device {device} has {count} DT placements")
            }
            Violation::Access { device, count } => write!(f, "device {device} has {count} access BSs"),
            Violation::Compute {
                server,
                allocated,
                capacity,
            } => write!(f, "compute: server {server} allocates {allocated} of {capacity} cycles/s"),
        }
    }
}

/// Checks hosting, capacity, one placement per device, the compute
/// budget and access uniqueness, reporting every violation found.
pub fn check_feasible(sol: &DeploymentSolution, topo: &Topology) -> std::result::Result<(), Vec<Violation>> {
    let k_count = topo.num_devices();
    let b_count = topo.num_bs();
    let mut out = Vec::new();
    if sol.host_flags.len() != b_count {
        out.push(Violation::Shape { what: "host_flags" });
    }
    if sol.association.len() != k_count || sol.association.iter().any(|r| r.len() != b_count) {
        out.push(Violation::Shape { what: "association" });
    }
    if sol.access_assoc.len() != k_count || sol.access_assoc.iter().any(|r| r.len() != b_count) {
        out.push(Violation::Shape { what: "access_assoc" });
    }
    if !out.is_empty() {
        return Err(out);
    }
    for k in 0..k_count {
        let count = sol.association[k].iter().filter(|&&v| v).count();
        if count != 1 {
            out.push(Violation::Assignment { device: k, count });
        }
        for m in 0..b_count {
            if sol.association[k][m] && !sol.host_flags[m] {
                out.push(Violation::NotHosting { device: k, server: m });
            }
        }
        let access = sol.access_assoc[k].iter().filter(|&&v| v).count();
        if access != 1 {
            out.push(Violation::Access { device: k, count: access });
        }
    }
    let loads = sol.host_loads();
    for m in 0..b_count {
        if loads[m] > topo.server_dt_capacity[m] {
            out.push(Violation::Capacity {
                server: m,
                load: loads[m],
                capacity: topo.server_dt_capacity[m],
            });
        }
        // Equal split: each of the J_m DTs gets F_m / J_m.
        if loads[m] > 0 {
            let share = topo.server_cycles[m] / loads[m] as f64;
            let allocated = share * loads[m] as f64;
            if allocated > topo.server_cycles[m] * (1.0 + 1e-12) {
                out.push(Violation::Compute {
                    server: m,
                    allocated,
                    capacity: topo.server_cycles[m],
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Average interaction latency of a solution under equal compute split.
pub fn deployment_objective(
    sol: &DeploymentSolution,
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
) -> Result<f64> {
    average_interaction_latency(sol, topo, lat, radio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::Point;

    fn topo(k: usize, b: usize, cap: usize) -> Topology {
        Topology {
            area_m: 100.0,
            device_positions: vec![Point::new(10.0, 10.0); k],
            bs_positions: (0..b).map(|j| Point::new(20.0 * j as f64, 0.0)).collect(),
            channel_gains: vec![vec![1e-6; b]; k],
            server_cycles: vec![1e10; b],
            server_dt_capacity: vec![cap; b],
        }
    }

    #[test]
    fn over_capacity_is_reported() {
        let t = topo(3, 1, 2);
        let sol = DeploymentSolution::from_indices(vec![true], &[0, 0, 0], &[0, 0, 0]);
        let errs = check_feasible(&sol, &t).unwrap_err();
        assert_eq!(errs, vec![Violation::Capacity { server: 0, load: 3, capacity: 2 }]);
    }

    #[test]
    fn unassigned_row_is_c3() {
        let t = topo(2, 2, 2);
        let mut sol = DeploymentSolution::from_indices(vec![true, true], &[0, 1], &[0, 1]);
        sol.association[1] = vec![false, false];
        let errs = check_feasible(&sol, &t).unwrap_err();
        assert_eq!(errs, vec![Violation::Assignment { device: 1, count: 0 }]);
    }

    #[test]
    fn non_hosting_placement_is_reported() {
        let t = topo(2, 2, 2);
        let sol = DeploymentSolution::from_indices(vec![true, false], &[0, 1], &[0, 0]);
        let errs = check_feasible(&sol, &t).unwrap_err();
        assert_eq!(errs, vec![Violation::NotHosting { device: 1, server: 1 }]);
    }

    #[test]
    fn equal_split_passes_c4() {
        let mut t = topo(5, 2, 5);
        t.server_cycles = vec![7.3e9, 1.9e10];
        let sol = DeploymentSolution::from_indices(vec![true, true], &[0, 0, 1, 0, 1], &[0; 5]);
        assert!(check_feasible(&sol, &t).is_ok());
        assert_eq!(sol.host_loads(), vec![3, 2]);
        assert_eq!(sol.host_vector(), Some(vec![0, 0, 1, 0, 1]));
    }
}
