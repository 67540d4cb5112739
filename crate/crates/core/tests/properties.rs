//! Randomized invariants over arbitrary small graphs and seeds: things that
//! must hold for *every* input, checked on generated ones.

use proptest::prelude::*;

use r1w1_core::algorithms::{check_trace_laws, AlgorithmSpec, InitSpec, WitnessPolicy};
use r1w1_core::engine::{self, daemon::Daemon, daemon::DaemonPolicy};
use r1w1_core::topology::Graph;
use r1w1_core::transformer::{check_exclusion, Simulator, TrParams};
use r1w1_core::verifier;

/// Arbitrary graph on 2..=7 processes from upper-triangle edge coin flips.
fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..=7)
        .prop_flat_map(|n| {
            (Just(n), proptest::collection::vec(any::<bool>(), n * (n - 1) / 2))
        })
        .prop_map(|(n, coins)| {
            let mut edges = Vec::new();
            let mut idx = 0;
            for a in 0..n {
                for b in (a + 1)..n {
                    if coins[idx] {
                        edges.push((a, b));
                    }
                    idx += 1;
                }
            }
            Graph::from_edges(n, &edges).expect("coin-flip edges are in range")
        })
}

fn arb_algorithm() -> impl Strategy<Value = AlgorithmSpec> {
    prop_oneof![
        Just(AlgorithmSpec::mmat11()),
        (1usize..=3).prop_map(|k| AlgorithmSpec::mkdom11(k).unwrap()),
        (0usize..=2).prop_map(|k| AlgorithmSpec::mkdep11(k).unwrap()),
    ]
}

fn arb_daemon() -> impl Strategy<Value = DaemonPolicy> {
    prop_oneof![
        any::<u64>().prop_map(|seed| DaemonPolicy::SeededRandom { seed }),
        Just(DaemonPolicy::RoundRobinEnabled),
        Just(DaemonPolicy::GreedyAdversarial),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Two-hop sets list exactly the processes at shortest-path distance 2.
    #[test]
    fn two_hop_agrees_with_bfs(g in arb_graph()) {
        for i in 0..g.n() {
            let by_bfs: Vec<usize> =
                (0..g.n()).filter(|&j| g.distance(i, j) == Some(2)).collect();
            prop_assert_eq!(g.two_hop(i), &by_bfs[..]);
        }
    }

    /// The single-removal minimality test matches full subset enumeration,
    /// and the single-addition maximality test matches full superset
    /// enumeration, on every random set.
    #[test]
    fn oracle_shortcuts_match_power_set(g in arb_graph(), mask in any::<u32>(), k in 0usize..=3) {
        let members: Vec<usize> = (0..g.n()).filter(|&v| mask & (1 << v) != 0).collect();
        if k >= 1 {
            prop_assert_eq!(
                verifier::is_minimal_k_dominating(&g, &members, k),
                verifier::is_minimal_k_dominating_by_power_set(&g, &members, k)
            );
        }
        prop_assert_eq!(
            verifier::is_maximal_k_dependent(&g, &members, k),
            verifier::is_maximal_k_dependent_by_power_set(&g, &members, k)
        );
    }

    /// Every run converges within the move bound, lands on a legitimate
    /// configuration that passes its structure oracle, and obeys the
    /// per-trace conservation laws — whatever the daemon.
    #[test]
    fn runs_converge_lawfully(
        g in arb_graph(),
        alg in arb_algorithm(),
        policy in arb_daemon(),
        init_seed in any::<u64>(),
    ) {
        let init = alg.initial_config(&g, &InitSpec::Random { seed: init_seed }).unwrap();
        let mut daemon = Daemon::new(policy);
        let trace = engine::run(&g, &alg, &init, &mut daemon, WitnessPolicy::LowestId, None).unwrap();
        prop_assert!(!trace.budget_exhausted);
        prop_assert!(trace.len() <= alg.move_bound(g.n()));
        prop_assert!(alg.is_legitimate(&g, &trace.final_config));
        prop_assert!(engine::is_silent(&g, &alg, &trace.final_config));
        if let Err(violations) = check_trace_laws(&alg, &g, &trace) {
            prop_assert!(false, "trace law violations: {violations:?}");
        }
    }

    /// Identical inputs give byte-identical traces.
    #[test]
    fn traces_replay_deterministically(
        g in arb_graph(),
        alg in arb_algorithm(),
        seed in any::<u64>(),
    ) {
        let init = alg.initial_config(&g, &InitSpec::Random { seed }).unwrap();
        let run = || {
            let mut daemon = Daemon::new(DaemonPolicy::SeededRandom { seed });
            engine::run(&g, &alg, &init, &mut daemon, WitnessPolicy::LowestId, None)
                .unwrap()
                .to_jsonl()
        };
        prop_assert_eq!(run(), run());
    }

    /// Sanitizing arbitrary records yields a domain-valid configuration,
    /// and sanitizing again changes nothing.
    #[test]
    fn sanitize_is_idempotent(g in arb_graph(), raw_seed in any::<u64>()) {
        use r1w1_core::engine::state::{Configuration, ProcState};
        // Build deliberately out-of-domain records.
        let n = g.n();
        let raw = Configuration::new(
            (0..n)
                .map(|i| ProcState::Pointer { q: Some((i + raw_seed as usize) % (n + 1) % n) })
                .collect(),
        );
        let alg = AlgorithmSpec::mmat11();
        if let Ok(clean) = alg.sanitize(&g, &raw) {
            prop_assert!(alg.validate(&g, &clean).is_ok());
            prop_assert_eq!(alg.sanitize(&g, &clean).unwrap(), clean);
        }
    }

    /// Simulated cycles keep executors at pairwise distance three or more
    /// and leave caches coherent at every full-cycle boundary.
    #[test]
    fn simulator_exclusion_and_coherency(
        g in arb_graph(),
        seed in any::<u64>(),
    ) {
        let alg = AlgorithmSpec::mmat11();
        let init = alg.initial_config(&g, &InitSpec::Random { seed }).unwrap();
        let params = TrParams { seed, max_cycles: 100, ..TrParams::default() };
        let mut sim = Simulator::new(&g, alg, &init, params).unwrap();
        let (metrics, records) = sim.run_to_silence();
        prop_assert!(metrics.converged);
        for record in &records {
            prop_assert!(check_exclusion(&g, &record.executors).is_ok());
        }
        prop_assert!(sim.check_cache_coherent().is_ok());
        prop_assert!(alg.is_legitimate(&g, &sim.projected_config()));
    }
}
