use crate::error::Result;
use crate::net_model::{achievable_rate, best_access_bs, LatencyParams, RadioParams, Topology};

/// Per-(device, server) latency split into a load-independent part and a
/// per-hosted-DT compute slope, so `T^inter(k, m) = comm + slope · J_m`
/// under equal compute split.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyTable {
    /// Access + backhaul time via the best access BS.
    pub comm: Vec<Vec<f64>>,
    /// `(D'_k + ΔD_k) · cycles_per_bit / F_m`.
    pub slope: Vec<Vec<f64>>,
    pub access: Vec<Vec<usize>>,
    /// `(D'_k + ΔD_k) · cycles_per_bit` per device.
    pub work: Vec<f64>,
}

impl LatencyTable {
    pub fn new(topo: &Topology, lat: &LatencyParams, radio: &RadioParams) -> Result<Self> {
        let k_count = topo.num_devices();
        let b_count = topo.num_bs();
        let mut comm = vec![vec![0.0; b_count]; k_count];
        let mut slope = vec![vec![0.0; b_count]; k_count];
        let mut access = vec![vec![0; b_count]; k_count];
        let mut work = vec![0.0; k_count];
        for k in 0..k_count {
            let bits = lat.history_bits[k] + lat.update_bits[k];
            work[k] = bits * lat.cycles_per_bit;
            for m in 0..b_count {
                let b = best_access_bs(k, m, topo, lat, radio);
                let rate = achievable_rate(topo.channel_gains[k][b], radio)?;
                access[k][m] = b;
                comm[k][m] = bits / rate + lat.backhaul_coeff * bits * topo.bs_distance(b, m);
                slope[k][m] = work[k] / topo.server_cycles[m];
            }
        }
        Ok(LatencyTable {
            comm,
            slope,
            access,
            work,
        })
    }

    pub fn num_devices(&self) -> usize {
        self.comm.len()
    }

    pub fn num_bs(&self) -> usize {
        self.comm.first().map_or(0, Vec::len)
    }

    pub fn pair(&self, k: usize, m: usize, load: usize) -> f64 {
        self.comm[k][m] + self.slope[k][m] * load as f64
    }

    /// Average interaction latency of a host assignment (one server index per device).
    pub fn objective(&self, hosts: &[usize]) -> f64 {
        let mut loads = vec![0usize; self.num_bs()];
        for &m in hosts {
            loads[m] += 1;
        }
        let total: f64 = hosts.iter().enumerate().map(|(k, &m)| self.pair(k, m, loads[m])).sum();
        total / (self.num_devices() * self.num_bs()) as f64
    }
}
