//! Geometry, channel and latency arithmetic for the DT-MEC network.
//!
//! Units are SI throughout: meters, seconds, bits, bits/second, cycles/second
//! and watts. Channel gains are dimensionless power ratios.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::deploy::DeploymentSolution;
use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Physical substrate of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub area_m: f64,
    pub device_positions: Vec<Point>,
    pub bs_positions: Vec<Point>,
    /// `channel_gains[k][b]` is the power gain between device `k` and BS `b`.
    pub channel_gains: Vec<Vec<f64>>,
    /// Compute capacity F_m of the server attached to each BS (cycles/s).
    pub server_cycles: Vec<f64>,
    /// Maximum number of DTs each server can host.
    pub server_dt_capacity: Vec<usize>,
}

impl Topology {
    pub fn num_devices(&self) -> usize {
        self.device_positions.len()
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    /// Euclidean distance between BS `b` and BS `m` (the backhaul span).
    pub fn bs_distance(&self, b: usize, m: usize) -> f64 {
        self.bs_positions[b].distance(&self.bs_positions[m])
    }

    pub fn device_bs_distance(&self, k: usize, b: usize) -> f64 {
        self.device_positions[k].distance(&self.bs_positions[b])
    }

    /// Checks the structural invariants; `cycles_range` bounds F_m when given.
    pub fn validate(&self, cycles_range: Option<(f64, f64)>) -> Result<()> {
        let k = self.num_devices();
        let b = self.num_bs();
        if b == 0 {
            return Err(Error::invalid("num_bs", "need at least one base station"));
        }
        let inside = |p: &Point| {
            (0.0..=self.area_m).contains(&p.x) && (0.0..=self.area_m).contains(&p.y)
        };
        if let Some(i) = self.device_positions.iter().position(|p| !inside(p)) {
            return Err(Error::invalid("device_positions", format!("device {i} outside area")));
        }
        if let Some(i) = self.bs_positions.iter().position(|p| !inside(p)) {
            return Err(Error::invalid("bs_positions", format!("BS {i} outside area")));
        }
        if self.channel_gains.len() != k || self.channel_gains.iter().any(|row| row.len() != b) {
            return Err(Error::invalid("channel_gains", format!("expected a {k}x{b} matrix")));
        }
        for (i, row) in self.channel_gains.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::invalid(
                        "channel_gains",
                        format!("gain[{i}][{j}] = {g} is not strictly positive"),
                    ));
                }
            }
        }
        if self.server_cycles.len() != b || self.server_dt_capacity.len() != b {
            return Err(Error::invalid("servers", "one entry per BS required"));
        }
        for (m, &f) in self.server_cycles.iter().enumerate() {
            ensure_positive(&format!("server_cycles[{m}]"), f)?;
            if let Some((lo, hi)) = cycles_range {
                if f < lo || f > hi {
                    return Err(Error::invalid(
                        format!("server_cycles[{m}]"),
                        format!("{f} outside [{lo}, {hi}]"),
                    ));
                }
            }
        }
        if let Some(m) = self.server_dt_capacity.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("server_dt_capacity[{m}]"), "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub tx_power_watt: f64,
    pub noise_power_watt: f64,
}

impl RadioParams {
    /// Builds the parameters from dBm quantities; noise power is the
    /// spectral density integrated over the band.
    pub fn from_dbm(bandwidth_hz: f64, tx_power_dbm: f64, noise_psd_dbm_hz: f64) -> Result<Self> {
        let radio = RadioParams {
            bandwidth_hz,
            tx_power_watt: dbm_to_watt(tx_power_dbm),
            noise_power_watt: dbm_to_watt(noise_psd_dbm_hz) * bandwidth_hz,
        };
        radio.validate()?;
        Ok(radio)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("tx_power_watt", self.tx_power_watt)?;
        ensure_positive("noise_power_watt", self.noise_power_watt)
    }
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams::from_dbm(20e6, 23.0, -174.0).expect("default radio parameters are valid")
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Per-device payload sizes and the network-wide latency coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyParams {
    /// D'_k: historical data shipped once to construct the DT (bits).
    pub history_bits: Vec<f64>,
    /// ΔD_k: size of one status update (bits).
    pub update_bits: Vec<f64>,
    /// β: backhaul latency per bit per meter (s/(bit·m)).
    pub backhaul_coeff: f64,
    /// CPU cycles needed per processed bit.
    pub cycles_per_bit: f64,
}

impl LatencyParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("backhaul_coeff", self.backhaul_coeff)?;
        ensure_positive("cycles_per_bit", self.cycles_per_bit)?;
        if self.history_bits.len() != self.update_bits.len() {
            return Err(Error::invalid("update_bits", "one entry per device required"));
        }
        for (k, (&hist, &upd)) in self.history_bits.iter().zip(&self.update_bits).enumerate() {
            ensure_positive(&format!("history_bits[{k}]"), hist)?;
            ensure_positive(&format!("update_bits[{k}]"), upd)?;
            if upd > hist {
                return Err(Error::invalid(
                    format!("update_bits[{k}]"),
                    format!("{upd} exceeds history size {hist}"),
                ));
            }
        }
        Ok(())
    }

    /// Processing rate (bits/s) seen by one DT when `server_cycles` is split
    /// evenly among `hosted` DTs.
    pub fn equal_split_rate(&self, server_cycles: f64, hosted: usize) -> f64 {
        server_cycles / hosted.max(1) as f64 / self.cycles_per_bit
    }
}

/// Achievable uplink rate `W log2(1 + g p / σ²)` in bits/s.
pub fn achievable_rate(gain: f64, radio: &RadioParams) -> Result<f64> {
    ensure_positive("gain", gain)?;
    radio.validate()?;
    let snr = gain * radio.tx_power_watt / radio.noise_power_watt;
    Ok(radio.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2)
}

/// Upload + backhaul + processing time for a payload of `bits`.
///
/// This is the common shape of both the construction and the update latency.
pub fn transfer_latency(
    bits: f64,
    rate: f64,
    backhaul_coeff: f64,
    distance_m: f64,
    f_alloc: f64,
) -> Result<f64> {
    ensure_positive("rate", rate)?;
    ensure_positive("f_alloc", f_alloc)?;
    if !(bits >= 0.0) {
        return Err(Error::invalid("bits", format!("must be >= 0, got {bits}")));
    }
    Ok(bits / rate + backhaul_coeff * bits * distance_m + bits / f_alloc)
}

/// T^const(k, m): ship D'_k over the access link to `b`, relay it to `m`,
/// then process it there.
pub fn construction_latency(
    k: usize,
    b: usize,
    m: usize,
    topo: &Topology,
    lat: &LatencyParams,
    rate: f64,
    f_alloc: f64,
) -> Result<f64> {
    transfer_latency(lat.history_bits[k], rate, lat.backhaul_coeff, topo.bs_distance(b, m), f_alloc)
}

/// T^upd(k, m): as [`construction_latency`] with the update size ΔD_k.
pub fn update_latency(
    k: usize,
    b: usize,
    m: usize,
    topo: &Topology,
    lat: &LatencyParams,
    rate: f64,
    f_alloc: f64,
) -> Result<f64> {
    transfer_latency(lat.update_bits[k], rate, lat.backhaul_coeff, topo.bs_distance(b, m), f_alloc)
}

/// T^inter(k, m) = T^const(k, m) + T^upd(k, m).
pub fn interaction_latency(
    k: usize,
    b: usize,
    m: usize,
    topo: &Topology,
    lat: &LatencyParams,
    rate: f64,
    f_alloc: f64,
) -> Result<f64> {
    Ok(construction_latency(k, b, m, topo, lat, rate, f_alloc)?
        + update_latency(k, b, m, topo, lat, rate, f_alloc)?)
}

/// Interaction latency of device `k` accessing through `b`, hosted at `m`,
/// where `m` currently hosts `hosted` DTs (equal compute split).
pub fn pair_latency(
    k: usize,
    b: usize,
    m: usize,
    hosted: usize,
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
) -> Result<f64> {
    let rate = achievable_rate(topo.channel_gains[k][b], radio)?;
    let f_alloc = lat.equal_split_rate(topo.server_cycles[m], hosted);
    interaction_latency(k, b, m, topo, lat, rate, f_alloc)
}

/// Deployment objective: `(1 / (K B)) Σ_{k,m} T^inter(k, m) v_{k,m}` with the
/// compute of each server split evenly among its hosted DTs.
pub fn average_interaction_latency(
    sol: &DeploymentSolution,
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
) -> Result<f64> {
    let k_count = topo.num_devices();
    let b_count = topo.num_bs();
    let loads = sol.host_loads();
    let mut total = 0.0;
    for k in 0..k_count {
        let b = sol.access_of(k).ok_or_else(|| {
            Error::invalid("access_assoc", format!("device {k} has no access BS"))
        })?;
        for m in 0..b_count {
            if sol.association[k][m] {
                total += pair_latency(k, b, m, loads[m], topo, lat, radio)?;
            }
        }
    }
    Ok(total / (k_count * b_count) as f64)
}

/// BS through which device `k` should reach a DT hosted at `m`: the one
/// minimizing the access + backhaul part of T^inter (lowest index on ties).
pub fn best_access_bs(
    k: usize,
    m: usize,
    topo: &Topology,
    lat: &LatencyParams,
    radio: &RadioParams,
) -> usize {
    let bits = lat.history_bits[k] + lat.update_bits[k];
    let mut best = (f64::INFINITY, 0);
    for b in 0..topo.num_bs() {
        let rate = radio.bandwidth_hz
            * (topo.channel_gains[k][b] * radio.tx_power_watt / radio.noise_power_watt).ln_1p()
            / std::f64::consts::LN_2;
        let t = bits / rate + lat.backhaul_coeff * bits * topo.bs_distance(b, m);
        if t < best.0 {
            best = (t, b);
        }
    }
    best.1
}

/// Sampling ranges for random instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub num_devices: usize,
    pub num_bs: usize,
    pub area_m: f64,
    pub server_cycles_min: f64,
    pub server_cycles_max: f64,
    /// Inclusive range for N_m. When unset, N_m is drawn from
    /// `[ceil(K/B), ceil(2K/B)]`, which always leaves room for every DT.
    pub dt_capacity_min: Option<usize>,
    pub dt_capacity_max: Option<usize>,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    pub history_bits_min: f64,
    pub history_bits_max: f64,
    pub update_bits_min: f64,
    pub update_bits_max: f64,
    pub backhaul_coeff: f64,
    pub cycles_per_bit: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            num_devices: 6,
            num_bs: 4,
            area_m: 1000.0,
            server_cycles_min: 5e9,
            server_cycles_max: 20e9,
            dt_capacity_min: None,
            dt_capacity_max: None,
            path_loss_exponent: 3.5,
            reference_distance_m: 1.0,
            history_bits_min: 1e6,
            history_bits_max: 10e6,
            update_bits_min: 10e3,
            update_bits_max: 100e3,
            backhaul_coeff: 1e-11,
            cycles_per_bit: 1000.0,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_devices == 0 {
            return Err(Error::invalid("num_devices", "must be >= 1"));
        }
        if self.num_bs == 0 {
            return Err(Error::invalid("num_bs", "must be >= 1"));
        }
        ensure_positive("area_m", self.area_m)?;
        ensure_positive("server_cycles_min", self.server_cycles_min)?;
        ensure_positive("path_loss_exponent", self.path_loss_exponent)?;
        ensure_positive("reference_distance_m", self.reference_distance_m)?;
        ensure_positive("history_bits_min", self.history_bits_min)?;
        ensure_positive("update_bits_min", self.update_bits_min)?;
        ensure_positive("backhaul_coeff", self.backhaul_coeff)?;
        ensure_positive("cycles_per_bit", self.cycles_per_bit)?;
        check_range("server_cycles", self.server_cycles_min, self.server_cycles_max)?;
        check_range("history_bits", self.history_bits_min, self.history_bits_max)?;
        check_range("update_bits", self.update_bits_min, self.update_bits_max)?;
        if self.update_bits_max > self.history_bits_min {
            return Err(Error::invalid(
                "update_bits_max",
                "must not exceed history_bits_min (ΔD ≤ D')",
            ));
        }
        let (lo, hi) = self.capacity_range();
        if lo == 0 || lo > hi {
            return Err(Error::invalid("dt_capacity_min", format!("bad range [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn capacity_range(&self) -> (usize, usize) {
        let b = self.num_bs.max(1);
        let lo = self.dt_capacity_min.unwrap_or_else(|| self.num_devices.div_ceil(b));
        let hi = self
            .dt_capacity_max
            .unwrap_or_else(|| lo.max((2 * self.num_devices).div_ceil(b)));
        (lo, hi)
    }

    pub fn path_loss(&self, distance_m: f64) -> f64 {
        (distance_m.max(self.reference_distance_m) / self.reference_distance_m)
            .powf(-self.path_loss_exponent)
    }
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo <= hi {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name}_max"), format!("{hi} is below the minimum {lo}")))
    }
}

/// A sampled instance: the topology plus the per-device payload sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topo: Topology,
    pub lat: LatencyParams,
}

/// Draws a random topology: uniform positions, exponential (Rayleigh power)
/// fading times log-distance path loss, uniform server capacities.
pub fn sample_topology(seed: u64, config: &TopologyConfig) -> Result<Topology> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_topology_with(&mut rng, config)
}

pub fn sample_topology_with<R: Rng + ?Sized>(rng: &mut R, config: &TopologyConfig) -> Result<Topology> {
    config.validate()?;
    let area = config.area_m;
    let point = |rng: &mut R| Point::new(rng.random_range(0.0..=area), rng.random_range(0.0..=area));
    let device_positions: Vec<Point> = (0..config.num_devices).map(|_| point(rng)).collect();
    let bs_positions: Vec<Point> = (0..config.num_bs).map(|_| point(rng)).collect();
    let server_cycles = (0..config.num_bs)
        .map(|_| rng.random_range(config.server_cycles_min..=config.server_cycles_max))
        .collect();
    let (cap_lo, cap_hi) = config.capacity_range();
    let server_dt_capacity = (0..config.num_bs).map(|_| rng.random_range(cap_lo..=cap_hi)).collect();
    let mut topo = Topology {
        area_m: area,
        device_positions,
        bs_positions,
        channel_gains: Vec::new(),
        server_cycles,
        server_dt_capacity,
    };
    resample_fading(&mut topo, rng, config);
    Ok(topo)
}

/// Redraws the small-scale fading on every link, keeping positions.
pub fn resample_fading<R: Rng + ?Sized>(topo: &mut Topology, rng: &mut R, config: &TopologyConfig) {
    let k_count = topo.num_devices();
    let b_count = topo.num_bs();
    topo.channel_gains = (0..k_count)
        .map(|k| {
            (0..b_count)
                .map(|b| {
                    let fading: f64 = Exp1.sample(rng);
                    (fading * config.path_loss(topo.device_bs_distance(k, b))).max(f64::MIN_POSITIVE)
                })
                .collect()
        })
        .collect();
}

/// Moves every device to a fresh uniform position and redraws fading.
pub fn resample_positions<R: Rng + ?Sized>(topo: &mut Topology, rng: &mut R, config: &TopologyConfig) {
    let area = topo.area_m;
    for p in &mut topo.device_positions {
        *p = Point::new(rng.random_range(0.0..=area), rng.random_range(0.0..=area));
    }
    resample_fading(topo, rng, config);
}

/// Per-device payload sizes drawn uniformly from the configured ranges.
pub fn sample_latency_params<R: Rng + ?Sized>(rng: &mut R, config: &TopologyConfig) -> LatencyParams {
    let history_bits = (0..config.num_devices)
        .map(|_| rng.random_range(config.history_bits_min..=config.history_bits_max))
        .collect();
    let update_bits = (0..config.num_devices)
        .map(|_| rng.random_range(config.update_bits_min..=config.update_bits_max))
        .collect();
    LatencyParams {
        history_bits,
        update_bits,
        backhaul_coeff: config.backhaul_coeff,
        cycles_per_bit: config.cycles_per_bit,
    }
}

/// Topology and payloads from one seed.
pub fn sample_scenario(seed: u64, config: &TopologyConfig) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = sample_topology_with(&mut rng, config)?;
    let lat = sample_latency_params(&mut rng, config);
    Ok(Scenario { topo, lat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_noise_radio(bandwidth_hz: f64) -> RadioParams {
        RadioParams {
            bandwidth_hz,
            tx_power_watt: 1.0,
            noise_power_watt: 1.0,
        }
    }

    fn two_bs_topo(distance: f64) -> Topology {
        Topology {
            area_m: 1000.0,
            device_positions: vec![Point::new(0.0, 0.0)],
            bs_positions: vec![Point::new(0.0, 0.0), Point::new(distance, 0.0)],
            channel_gains: vec![vec![1.0, 1.0]],
            server_cycles: vec![1e10, 1e10],
            server_dt_capacity: vec![1, 1],
        }
    }

    fn lat(history: f64, update: f64) -> LatencyParams {
        LatencyParams {
            history_bits: vec![history],
            update_bits: vec![update],
            backhaul_coeff: 1e-11,
            cycles_per_bit: 1000.0,
        }
    }

    #[test]
    fn rate_examples() {
        let radio = unit_noise_radio(20e6);
        assert_relative_eq!(achievable_rate(1.0, &radio).unwrap(), 20e6, max_relative = 1e-12);
        assert_relative_eq!(achievable_rate(3.0, &radio).unwrap(), 40e6, max_relative = 1e-12);
        assert!(achievable_rate(1e-300, &radio).unwrap() < 1e-200);
    }

    #[test]
    fn rate_rejects_bad_inputs() {
        let radio = unit_noise_radio(20e6);
        assert!(achievable_rate(0.0, &radio).is_err());
        assert!(achievable_rate(-1.0, &radio).is_err());
        let bad = RadioParams { bandwidth_hz: 0.0, ..radio };
        assert!(achievable_rate(1.0, &bad).is_err());
    }

    #[test]
    fn noise_power_from_psd() {
        let radio = RadioParams::default();
        // -174 dBm/Hz over 20 MHz is about -101 dBm.
        let dbm = 10.0 * (radio.noise_power_watt * 1e3).log10();
        assert_relative_eq!(dbm, -174.0 + 10.0 * 20e6f64.log10(), epsilon = 1e-9);
        assert_relative_eq!(radio.tx_power_watt, 0.199_526_231_496_887_9, max_relative = 1e-12);
    }

    #[test]
    fn construction_latency_example() {
        let topo = two_bs_topo(500.0);
        let t = construction_latency(0, 0, 1, &topo, &lat(8e6, 8e4), 20e6, 20e6).unwrap();
        assert_relative_eq!(t, 0.84, max_relative = 1e-12);
        let t = update_latency(0, 0, 1, &topo, &lat(8e6, 8e4), 20e6, 20e6).unwrap();
        assert_relative_eq!(t, 0.0084, max_relative = 1e-12);
        let t = interaction_latency(0, 0, 1, &topo, &lat(8e6, 8e4), 20e6, 20e6).unwrap();
        assert_relative_eq!(t, 0.8484, max_relative = 1e-12);
    }

    #[test]
    fn co_located_zeroes_backhaul() {
        let topo = two_bs_topo(500.0);
        let l = lat(8e6, 8e4);
        let t = construction_latency(0, 1, 1, &topo, &l, 20e6, 20e6).unwrap();
        assert_eq!(t, 0.8);
        let t = update_latency(0, 0, 0, &topo, &l, 20e6, 20e6).unwrap();
        assert_eq!(t, 0.008);
    }

    #[test]
    fn degenerate_payloads() {
        assert_eq!(transfer_latency(0.0, 1e6, 1e-11, 300.0, 1e6).unwrap(), 0.0);
        let topo = two_bs_topo(500.0);
        let same = lat(8e6, 8e6);
        let c = construction_latency(0, 0, 1, &topo, &same, 20e6, 20e6).unwrap();
        let u = update_latency(0, 0, 1, &topo, &same, 20e6, 20e6).unwrap();
        assert_eq!(c, u);
        // ΔD = 0 leaves only the construction term.
        let t = transfer_latency(8e6, 20e6, 1e-11, 500.0, 20e6).unwrap()
            + transfer_latency(0.0, 20e6, 1e-11, 500.0, 20e6).unwrap();
        assert_relative_eq!(t, 0.84, max_relative = 1e-12);
    }

    #[test]
    fn zero_rate_or_allocation_is_an_error() {
        assert!(transfer_latency(1.0, 0.0, 1e-11, 1.0, 1.0).is_err());
        assert!(transfer_latency(1.0, 1.0, 1e-11, 1.0, 0.0).is_err());
    }

    #[test]
    fn sampled_topology_is_deterministic_and_valid() {
        let config = TopologyConfig {
            num_devices: 8,
            num_bs: 3,
            ..TopologyConfig::default()
        };
        let a = sample_topology(7, &config).unwrap();
        let b = sample_topology(7, &config).unwrap();
        assert_eq!(a, b);
        a.validate(Some((config.server_cycles_min, config.server_cycles_max))).unwrap();
        assert!(a.channel_gains.iter().flatten().all(|&g| g > 0.0));
        let total: usize = a.server_dt_capacity.iter().sum();
        assert!(total >= config.num_devices);
        assert_ne!(a, sample_topology(8, &config).unwrap());
    }

    #[test]
    fn fading_has_unit_mean() {
        let config = TopologyConfig {
            num_devices: 1,
            num_bs: 1,
            path_loss_exponent: 1e-9,
            ..TopologyConfig::default()
        };
        let mut topo = sample_topology(1, &config).unwrap();
        // Pin the device onto the BS so the path loss is exactly 1.
        topo.device_positions[0] = topo.bs_positions[0];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            resample_fading(&mut topo, &mut rng, &config);
            sum += topo.channel_gains[0][0];
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean fading {mean}");
    }

    #[test]
    fn config_validation_names_parameter() {
        let config = TopologyConfig {
            update_bits_max: 2e6,
            ..TopologyConfig::default()
        };
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("update_bits_max"), "{err}");
    }
}
