//! Digital-twin deployment and synchronization for MEC networks.
//!
//! - [`net_model`]: rates and PT-DT interaction latency.
//! - [`state_process`]: content-change chain and delivery model.
//! - [`sched_mdp`]: the AoCI/update-cost scheduling MDP and its solvers.
//! - [`deploy`]: DT placement and association (oracle, baselines, actor-critic).
//! - [`simulator`]: slotted Monte-Carlo evaluation of update policies.
//! - [`config`] and [`experiment`]: configuration and CSV-producing runs.

pub mod config;
pub mod deploy;
pub mod error;
pub mod experiment;
pub mod export;
pub mod net_model;
pub mod sched_mdp;
pub mod simulator;
pub mod state_process;

pub use error::{Error, Result};
