use majsim::dynamics::{self, consensus_floor, potential_z, would_flip, RunOptions};
use majsim::exact::{self, StateIndex};
use majsim::stream::trial_rng;
use majsim::theory::{self, consensus_bound};
use majsim::{Graph, OpinionState};
use proptest::prelude::*;

/// A random connected graph on `2..=max_n` vertices.
fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, any::<u64>(), 0.0..1.0f64).prop_map(|(n, seed, density)| {
        let max_extra = n * (n - 1) / 2 - (n - 1);
        let extra = (density * max_extra as f64) as usize;
        Graph::random_connected(n, extra, seed).unwrap()
    })
}

fn graph_and_state(max_n: usize) -> impl Strategy<Value = (Graph, OpinionState)> {
    graph(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), any::<u32>().prop_map(move |c| OpinionState::from_code(c & ((1 << n) - 1), n)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn edge_list_round_trip_and_handshake(g in graph(30)) {
        let degree_sum: usize = (0..g.n()).map(|i| g.degree(i)).sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        prop_assert!((0..g.n()).all(|i| !g.neighbors(i).contains(&i)));
        prop_assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn flip_rule_is_polarity_symmetric((g, x) in graph_and_state(12)) {
        let neg = x.negated();
        for i in 0..g.n() {
            for &j in g.neighbors(i) {
                prop_assert_eq!(would_flip(&g, &x, i, j).unwrap(), would_flip(&g, &neg, i, j).unwrap());
            }
        }
        prop_assert_eq!(potential_z(&g, &x), potential_z(&g, &neg));
    }

    #[test]
    fn step_is_local_and_obeys_decrement((g, x) in graph_and_state(12), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let (next, out) = dynamics::step(&g, &x, &mut rng);
        let changed: Vec<usize> = (0..g.n()).filter(|&i| next[i] != x[i]).collect();
        prop_assert!(g.is_adjacent(out.agent, out.neighbor));
        if out.flipped {
            prop_assert_eq!(changed, vec![out.agent]);
            prop_assert_eq!(next[out.agent], x[out.neighbor]);
            prop_assert!(out.z_decrement >= 2 && out.z_decrement % 2 == 0);
        } else {
            prop_assert!(changed.is_empty());
            prop_assert_eq!(out.z_decrement, 0);
        }
        prop_assert_eq!(potential_z(&g, &x) - potential_z(&g, &next), out.z_decrement);
    }

    #[test]
    fn run_record_invariants((g, x) in graph_and_state(14), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 1);
        let rec = dynamics::run_to_absorption(&g, &x, &mut rng, RunOptions::for_graph(&g).checked()).unwrap();
        let floor = consensus_floor(&g);
        prop_assert!(theory::validate_absorbed_state(&g, &rec.final_state));
        prop_assert!(rec.z_final <= rec.z_initial);
        prop_assert_eq!(rec.consensus, rec.z_final == floor);
        prop_assert!(rec.flips <= (rec.z_initial - floor) / 2);
        prop_assert!(rec.flips <= rec.steps_to_absorption);
    }

    #[test]
    fn bound_symmetric_and_smallest_at_half(p in 0.0..=1.0f64, m in 1usize..200) {
        prop_assert!((consensus_bound(p, m) - consensus_bound(1.0 - p, m)).abs() < 1e-9);
        prop_assert!(consensus_bound(p, m) >= consensus_bound(0.5, m) - 1e-12);
    }

    #[test]
    fn blocked_paths_are_valid_and_hopeless((g, x) in graph_and_state(10)) {
        for bp in theory::find_blocked_paths(&g, &x) {
            prop_assert!(bp.is_valid(&g, &x));
            prop_assert!(!exact::can_reach_consensus(&g, StateIndex::from_state(&x)).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_chain_properties(g in graph(8), p in 0.0..=1.0f64) {
        let analysis = exact::exact_consensus_probability(&g, p).unwrap();
        let reach = exact::consensus_reachable(&g).unwrap();
        for (s, &h) in analysis.h.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert_eq!(h > 0.0, reach[s]);
            let total: f64 = exact::transitions(&g, StateIndex(s as u32)).unwrap().iter().map(|t| t.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        for s in &analysis.absorbing {
            let expected = if s.is_consensus(g.n()) { 1.0 } else { 0.0 };
            prop_assert_eq!(analysis.h_of(*s), expected);
        }
        let mirrored = analysis.with_p(1.0 - p).p_consensus;
        prop_assert!((analysis.p_consensus - mirrored).abs() < 1e-9);
        prop_assert!(analysis.p_consensus >= consensus_bound(p, g.edge_count()) - 1e-9);
    }
}
