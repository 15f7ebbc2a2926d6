//! Average-cost MDP for AoCI-aware update scheduling of one PT-DT pair.
//!
//! State `(Δ, δ)`, action update/idle, stage cost `Δ + a ω C`. Solved by
//! relative policy iteration (with the Δ-threshold shortcut) and checked
//! against relative value iteration and exhaustive enumeration.

mod chain;
mod evaluate;
mod export;
mod model;
mod multichain;
mod oracle;
mod solve;

pub use chain::{average_cost_of, long_run, LongRun, EXACT_STATE_LIMIT};
pub use evaluate::{
    evaluate_policy, evaluate_policy_with, EvalMethod, EvalOptions, EvalStats, Evaluation, DENSE_STATE_LIMIT,
};
pub use export::{policy_from_csv, policy_table_csv, solve_result_csv};
pub use model::{stage_cost, transitions, AociState, MdpSpec, PolicyTable, SparseChain, Successors};
pub use multichain::MultichainEvaluation;
pub use oracle::{enumerate_policies_oracle, EnumerationResult, ENUMERATION_STATE_LIMIT};
pub use solve::{
    improve_policy, relative_policy_iteration, relative_policy_iteration_with, relative_value_iteration,
    relative_value_iteration_with, threshold_for, threshold_from_return_prob, RpiOptions, RviOptions,
    SolveResult, SolveStats,
};
