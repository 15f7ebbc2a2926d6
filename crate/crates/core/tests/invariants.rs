//! Property tests over random specs, policies, instances and actions.

use std::collections::VecDeque;

use dtsync::deploy::{check_feasible, deployment_objective, exhaustive_oracle, repair_action, DeploymentSolution, OracleLimits};
use dtsync::net_model::{sample_scenario, RadioParams, TopologyConfig};
use dtsync::sched_mdp::{
    evaluate_policy, improve_policy, relative_policy_iteration, transitions, AociState, MdpSpec, PolicyTable,
    SolveStats,
};
use dtsync::simulator::{aggregate, run_replication, SchedulePolicy, SimConfig};
use dtsync::state_process::{return_probability, DeliveryModel};
use proptest::prelude::*;

fn spec_strategy(max_cap: u32) -> impl Strategy<Value = MdpSpec> {
    (1..=max_cap, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..30.0f64, 0.0..2.0f64).prop_flat_map(move |(aoi_cap, p, q, c, w)| {
        (aoi_cap..=max_cap).prop_map(move |aoci_cap| MdpSpec {
            aoci_cap,
            aoi_cap,
            p_tx: p,
            content_q: q,
            update_cost: c,
            weight: w,
        })
    })
}

/// 2×2 chain matrix power, independent of the closed form.
fn matrix_return_prob(q: f64, delta: u32) -> f64 {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let step = [[1.0 - q, q], [q, 1.0 - q]];
    for _ in 0..delta {
        let mut n = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] = m[i][0] * step[0][j] + m[i][1] * step[1][j];
            }
        }
        m = n;
    }
    m[0][0]
}

#[test]
fn return_probability_matches_matrix_power() {
    for qi in 0..=10 {
        let q = qi as f64 / 10.0;
        for delta in 0..=50 {
            let got = return_probability(q, delta).unwrap();
            let want = matrix_return_prob(q, delta);
            assert!((got - want).abs() <= 1e-12, "q={q} delta={delta}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_are_distributions(spec in spec_strategy(12), i in 0usize..144, update: bool) {
        let s = spec.state(i % spec.num_states());
        let succ = transitions(s, update, &spec);
        prop_assert!(!succ.is_empty() && succ.len() <= 3);
        let total: f64 = succ.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 4.0 * f64::EPSILON);
        for (n, p) in succ.iter() {
            prop_assert!(spec.contains(*n) && *p > 0.0);
        }
    }

    #[test]
    fn states_reachable_from_origin_keep_aoci_above_aoi(spec in spec_strategy(12)) {
        let mut seen = vec![false; spec.num_states()];
        let mut queue = VecDeque::from([AociState::ORIGIN]);
        seen[spec.index(AociState::ORIGIN)] = true;
        while let Some(s) = queue.pop_front() {
            prop_assert!(s.aoci >= s.aoi, "{:?}", s);
            for update in [false, true] {
                for (n, _) in transitions(s, update, &spec).iter() {
                    if !seen[spec.index(*n)] {
                        seen[spec.index(*n)] = true;
                        queue.push_back(*n);
                    }
                }
            }
        }
    }

    #[test]
    fn policy_iteration_gain_never_increases(spec in spec_strategy(10)) {
        let r = relative_policy_iteration(&spec).unwrap();
        for w in r.gain_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", r.gain_history);
        }
        prop_assert_eq!(r.bias[spec.index(AociState::ORIGIN)], 0.0);
        prop_assert_eq!(r.stats.shortcut_mismatches, 0);
        prop_assert!(r.gain >= 1.0 - 1e-12);
        prop_assert!(r.policy.monotonicity_violation().is_none());
    }

    #[test]
    fn evaluation_pins_reference_and_satisfies_bias_equations(
        spec in spec_strategy(8).prop_filter("lossy delivery keeps every policy unichain", |s| s.p_tx < 1.0),
        bits in any::<u64>(),
    ) {
        let policy = PolicyTable::from_fn(&spec, |s| bits >> (spec.index(s) % 64) & 1 == 1);
        let ev = evaluate_policy(&policy, &spec, AociState::ORIGIN).unwrap();
        prop_assert_eq!(ev.bias[spec.index(AociState::ORIGIN)], 0.0);
        prop_assert!(ev.residual <= 1e-8, "residual {}", ev.residual);
    }

    #[test]
    fn shortcut_agrees_with_full_argmin(spec in spec_strategy(10)) {
        let r = relative_policy_iteration(&spec).unwrap();
        let mut stats = SolveStats::default();
        let with = improve_policy(&r.bias, &spec, Some(&r.policy), true, &mut stats);
        let without = improve_policy(&r.bias, &spec, Some(&r.policy), false, &mut SolveStats::default());
        prop_assert_eq!(stats.shortcut_mismatches, 0);
        prop_assert_eq!(with, without);
    }

    #[test]
    fn aggregation_ignores_replication_order(seed in any::<u64>(), rot in 0usize..16) {
        let config = SimConfig {
            aoci_cap: 20,
            aoi_cap: 20,
            horizon: 200,
            runs: 16,
            seed,
            ..SimConfig::default()
        };
        let mut reps: Vec<_> = (0..16)
            .map(|r| run_replication(&SchedulePolicy::ZeroWait, &config, r, false).unwrap())
            .collect();
        let before = aggregate(&reps, 12.0);
        reps.rotate_left(rot);
        reps.reverse();
        prop_assert_eq!(aggregate(&reps, 12.0), before);
    }

    #[test]
    fn repair_always_yields_a_feasible_solution(
        seed in 0u64..1000,
        k in 1usize..9,
        b in 1usize..5,
        bits in proptest::collection::vec(any::<bool>(), 0..128),
    ) {
        let cfg = TopologyConfig { num_devices: k, num_bs: b, ..TopologyConfig::default() };
        let sc = sample_scenario(seed, &cfg).unwrap();
        let bit = |i: usize| bits.get(i % bits.len().max(1)).copied().unwrap_or(false);
        let raw = DeploymentSolution {
            host_flags: (0..b).map(|m| bit(m)).collect(),
            association: (0..k).map(|d| (0..b).map(|m| bit(b + d * b + m)).collect()).collect(),
            access_assoc: (0..k).map(|d| (0..b).map(|m| bit(7 + d * b + m)).collect()).collect(),
        };
        let fixed = repair_action(&raw, &sc.topo, &sc.lat, &RadioParams::default()).unwrap();
        prop_assert!(check_feasible(&fixed, &sc.topo).is_ok());
        prop_assert_eq!(repair_action(&fixed, &sc.topo, &sc.lat, &RadioParams::default()).unwrap(), fixed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_lower_bounds_every_repaired_action(seed in 0u64..500, bits in any::<u64>()) {
        let cfg = TopologyConfig { num_devices: 5, num_bs: 3, ..TopologyConfig::default() };
        let sc = sample_scenario(seed, &cfg).unwrap();
        let radio = RadioParams::default();
        let oracle = exhaustive_oracle(&sc.topo, &sc.lat, &radio, &OracleLimits::default()).unwrap();
        prop_assert!(check_feasible(&oracle.solution, &sc.topo).is_ok());
        let raw = DeploymentSolution::from_indices(
            (0..3).map(|m| bits >> m & 1 == 1).collect(),
            &(0..5).map(|d| (bits >> (3 + 2 * d) & 3) as usize % 3).collect::<Vec<_>>(),
            &[0; 5],
        );
        let fixed = repair_action(&raw, &sc.topo, &sc.lat, &radio).unwrap();
        let obj = deployment_objective(&fixed, &sc.topo, &sc.lat, &radio).unwrap();
        prop_assert!(oracle.objective <= obj * (1.0 + 1e-12));
    }
}

#[test]
fn outage_delivery_matches_its_fixed_equivalent() {
    let p = (-0.5f64).exp();
    let base = SimConfig {
        aoci_cap: 30,
        aoi_cap: 30,
        horizon: 300,
        runs: 4,
        ..SimConfig::default()
    };
    let outage = SimConfig {
        delivery: DeliveryModel::rayleigh_outage(1.0, 2.0).unwrap(),
        ..base
    };
    let fixed = SimConfig {
        delivery: DeliveryModel::fixed(p).unwrap(),
        ..base
    };
    for run in 0..4 {
        let a = run_replication(&SchedulePolicy::ZeroWait, &outage, run, true).unwrap();
        let b = run_replication(&SchedulePolicy::ZeroWait, &fixed, run, true).unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
