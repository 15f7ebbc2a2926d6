//! DT placement and association: feasibility, the average-latency objective, an
//! exhaustive oracle for small instances, baselines and the actor-critic
//! learner.

mod baselines;
mod env;
mod export;
mod learner;
pub mod mlp;
mod oracle;
mod repair;
mod solution;
mod table;

pub use baselines::{nearest_baseline, random_baseline, RANDOM_MAX_DRAWS};
pub use env::{env_step, DeployEnv, DeployEnvState, Dynamics, RewardParams, StepOutcome};
pub use export::{cost_curve_csv, solution_csv};
pub use learner::{actor_critic_train, DeployPolicy, LearnerConfig, TrainingReport};
pub use oracle::{exhaustive_oracle, OracleLimits, OracleResult};
pub use repair::repair_action;
pub use solution::{check_feasible, deployment_objective, DeploymentSolution, Violation};
pub use table::LatencyTable;
