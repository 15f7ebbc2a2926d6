//! Content-change and delivery processes of a single PT-DT pair.
//!
//! The physical twin follows a symmetric two-state Markov chain that flips
//! with probability `q` per slot. Its δ-step return probability does not
//! depend on the current state, which is what the scheduling MDP needs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, ensure_probability, Error, Result};

/// Probability that the chain sits in the same state after `delta` slots:
/// `(1 + (1 - 2q)^δ) / 2`.
pub fn return_probability(q: f64, delta: u32) -> Result<f64> {
    ensure_probability("q", q)?;
    Ok(return_probability_unchecked(q, delta))
}

#[inline]
pub(crate) fn return_probability_unchecked(q: f64, delta: u32) -> f64 {
    if delta == 0 {
        return 1.0;
    }
    0.5 * (1.0 + (1.0 - 2.0 * q).powi(delta as i32))
}

/// Probability that a delivered update carries new content, `1 - p_δ`.
pub fn change_probability(q: f64, delta: u32) -> Result<f64> {
    Ok(1.0 - return_probability(q, delta)?)
}

/// `P(SNR > threshold)` for an exponentially distributed SNR with the given
/// mean (Rayleigh fading).
pub fn outage_success_probability(snr_threshold: f64, mean_snr: f64) -> Result<f64> {
    ensure_positive("mean_snr", mean_snr)?;
    if !(snr_threshold >= 0.0) {
        return Err(Error::invalid("snr_threshold", format!("must be >= 0, got {snr_threshold}")));
    }
    Ok((-snr_threshold / mean_snr).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentChain {
    flip_prob: f64,
    state: bool,
}

impl ContentChain {
    pub fn new(flip_prob: f64) -> Result<Self> {
        ensure_probability("q", flip_prob)?;
        Ok(ContentChain {
            flip_prob,
            state: false,
        })
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn state(&self) -> bool {
        self.state
    }

    pub fn return_probability(&self, delta: u32) -> f64 {
        return_probability_unchecked(self.flip_prob, delta)
    }

    /// Advances one slot and returns the new state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if bernoulli(rng, self.flip_prob) {
            self.state = !self.state;
        }
        self.state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DeliveryModel {
    Fixed { p_tx: f64 },
    RayleighOutage { snr_threshold: f64, mean_snr: f64 },
}

impl DeliveryModel {
    pub fn fixed(p_tx: f64) -> Result<Self> {
        ensure_probability("p_tx", p_tx)?;
        Ok(DeliveryModel::Fixed { p_tx })
    }

    pub fn rayleigh_outage(snr_threshold: f64, mean_snr: f64) -> Result<Self> {
        outage_success_probability(snr_threshold, mean_snr)?;
        Ok(DeliveryModel::RayleighOutage {
            snr_threshold,
            mean_snr,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeliveryModel::Fixed { p_tx } => ensure_probability("p_tx", p_tx),
            DeliveryModel::RayleighOutage {
                snr_threshold,
                mean_snr,
            } => outage_success_probability(snr_threshold, mean_snr).map(|_| ()),
        }
    }

    /// Per-attempt success probability.
    pub fn p_tx(&self) -> f64 {
        match *self {
            DeliveryModel::Fixed { p_tx } => p_tx,
            DeliveryModel::RayleighOutage {
                snr_threshold,
                mean_snr,
            } => (-snr_threshold / mean_snr).exp(),
        }
    }
}

pub fn draw_delivery<R: Rng + ?Sized>(model: &DeliveryModel, rng: &mut R) -> bool {
    bernoulli(rng, model.p_tx())
}

pub fn step_content<R: Rng + ?Sized>(chain: &mut ContentChain, rng: &mut R) -> bool {
    chain.step(rng)
}

/// One uniform draw per call, so streams stay aligned for any `p`.
#[inline]
pub(crate) fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    /// Same-state entry of the δ-th power of the 2x2 flip matrix.
    fn matrix_power_oracle(q: f64, delta: u32) -> f64 {
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        let m = [[1.0 - q, q], [q, 1.0 - q]];
        for _ in 0..delta {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = acc[i][0] * m[0][j] + acc[i][1] * m[1][j];
                }
            }
            acc = next;
        }
        acc[0][0]
    }

    #[test]
    fn closed_form_matches_matrix_power() {
        for qi in 0..=10 {
            let q = qi as f64 / 10.0;
            for delta in 0..=50 {
                let p = return_probability(q, delta).unwrap();
                assert!((p - matrix_power_oracle(q, delta)).abs() <= 1e-12, "q={q} δ={delta}");
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn return_probability_examples() {
        assert_relative_eq!(return_probability(0.1, 1).unwrap(), 0.9, epsilon = 1e-15);
        for delta in 1..20 {
            assert_eq!(return_probability(0.5, delta).unwrap(), 0.5);
        }
        for q in [0.0, 0.3, 1.0] {
            assert_eq!(return_probability(q, 0).unwrap(), 1.0);
        }
        assert!(return_probability(-0.1, 1).is_err());
        assert!(return_probability(1.1, 1).is_err());
    }

    #[test]
    fn change_probability_examples() {
        assert_relative_eq!(change_probability(0.1, 1).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(change_probability(0.2, 0).unwrap(), 0.0);
        assert_eq!(change_probability(0.5, 3).unwrap(), 0.5);
    }

    #[test]
    fn staleness_is_strictly_monotone_below_half() {
        for q in [0.05, 0.1, 0.3, 0.45] {
            for delta in 0..10 {
                assert!(return_probability(q, delta + 1).unwrap() < return_probability(q, delta).unwrap());
            }
        }
    }

    #[test]
    fn outage_examples() {
        assert_eq!(outage_success_probability(0.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(outage_success_probability(2.0, 2.0).unwrap(), (-1.0f64).exp());
        assert_relative_eq!(outage_success_probability(2.0, 2.0).unwrap(), 0.3679, epsilon = 1e-4);
        assert!(outage_success_probability(1.0, 0.0).is_err());
    }

    #[test]
    fn outage_matches_monte_carlo() {
        let (threshold, mean) = (1.5, 2.5);
        let exact = outage_success_probability(threshold, mean).unwrap();
        let dist = Exp::new(1.0 / mean).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| dist.sample(&mut rng) > threshold).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - exact).abs() / exact < 0.005, "freq {freq} vs {exact}");
    }

    #[test]
    fn chain_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut frozen = ContentChain::new(0.0).unwrap();
        assert!((0..100).all(|_| !frozen.step(&mut rng)));
        let mut flipper = ContentChain::new(1.0).unwrap();
        let states: Vec<bool> = (0..6).map(|_| step_content(&mut flipper, &mut rng)).collect();
        assert_eq!(states, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn flip_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut chain = ContentChain::new(0.3).unwrap();
        let n = 100_000;
        let mut flips = 0;
        let mut prev = chain.state();
        for _ in 0..n {
            let s = chain.step(&mut rng);
            flips += usize::from(s != prev);
            prev = s;
        }
        assert!((flips as f64 / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn delivery_draws_are_reproducible() {
        let model = DeliveryModel::fixed(0.7).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| draw_delivery(&model, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        let outage = DeliveryModel::rayleigh_outage(1.0, 1.0).unwrap();
        assert_relative_eq!(outage.p_tx(), (-1.0f64).exp());
        assert!(DeliveryModel::fixed(1.5).is_err());
    }
}
