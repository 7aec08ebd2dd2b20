mod common;

use depfdr::engine::{self, EngineConfig, Verdict};
use depfdr::graph::{largest_ind_containing, DependencyGraph};
use depfdr::oracle::{
    brute_force_indbh, check_monotonicity, check_neighbor_blindness, check_self_consistency,
};
use depfdr::procedures::{
    bh, bonferroni, by, indbh_k_reference, randomized_prune, step_down_bh, su_fixed_point,
    Procedure,
};
use depfdr::{Level, PValues, RejectionSet, NO_RANK};
use proptest::prelude::*;
use proptest::sample::select;

fn graph_strategy(max_m: usize) -> impl Strategy<Value = DependencyGraph> {
    (1..=max_m).prop_flat_map(|m| {
        let pairs = m * (m - 1) / 2;
        (
            Just(m),
            0.0..1.0f64,
            proptest::collection::vec(0.0..1.0f64, pairs),
        )
            .prop_map(|(m, density, coins)| {
                let mut edges = Vec::new();
                let mut c = coins.iter();
                for i in 0..m {
                    for j in i + 1..m {
                        if *c.next().unwrap() < density {
                            edges.push((i, j));
                        }
                    }
                }
                DependencyGraph::from_edges(m, &edges).unwrap()
            })
    })
}

fn pvalue() -> impl Strategy<Value = f64> {
    prop_oneof![
        0.0..=1.0f64,
        0.0..0.1f64,
        select(vec![0.0, 0.01, 0.02, 0.04, 0.05, 1.0])
    ]
}

fn instance(max_m: usize) -> impl Strategy<Value = (DependencyGraph, PValues, f64)> {
    graph_strategy(max_m).prop_flat_map(|g| {
        let m = g.m();
        (
            Just(g),
            proptest::collection::vec(pvalue(), m).prop_map(|v| PValues::new(v).unwrap()),
            select(vec![0.05, 0.1, 0.2, 0.3, 0.5]),
        )
    })
}

fn is_independent(g: &DependencyGraph, s: &[usize]) -> bool {
    s.iter().all(|&a| s.iter().all(|&b| !g.has_edge(a, b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn maximal_sets_are_independent_and_maximal(g in graph_strategy(12)) {
        let sets = g.maximal_independent_sets();
        for s in &sets {
            prop_assert!(is_independent(&g, s));
            for v in 0..g.m() {
                if !s.contains(&v) {
                    prop_assert!(s.iter().any(|&u| g.has_edge(u, v)), "{v} extends {s:?}");
                }
            }
        }
        let best = sets.iter().map(Vec::len).max().unwrap_or(0);
        prop_assert_eq!(g.independence_number(), best);
    }

    #[test]
    fn largest_set_size_matches_independence_number((g, p, alpha) in instance(10), r in 1usize..=10) {
        let m = g.m();
        let r = r.min(m);
        let t = Level::new(alpha, m).threshold(r);
        for i in 0..m {
            let s = largest_ind_containing(&g, &p, alpha, i, r).unwrap();
            let q: Vec<usize> = (0..m).filter(|&j| j != i && !g.has_edge(i, j) && p[j] <= t).collect();
            let (sub, _) = g.induced_subgraph(&q).unwrap();
            prop_assert_eq!(s.len(), 1 + sub.independence_number());
            prop_assert!(s.contains(&i));
            prop_assert!(is_independent(&g, &s));
        }
    }

    #[test]
    fn induced_subgraph_keeps_exactly_internal_edges(g in graph_strategy(12), picks in proptest::collection::vec(any::<bool>(), 12)) {
        let nodes: Vec<usize> = (0..g.m()).filter(|&v| picks[v]).collect();
        let (sub, map) = g.induced_subgraph(&nodes).unwrap();
        prop_assert_eq!(&map, &nodes);
        for a in 0..nodes.len() {
            for b in 0..nodes.len() {
                if a != b {
                    prop_assert_eq!(sub.has_edge(a, b), g.has_edge(nodes[a], nodes[b]));
                }
            }
        }
    }

    #[test]
    fn chain_inclusions((g, p, alpha) in instance(9)) {
        let chain = [
            engine::indbh_fast(&p, alpha, &g).unwrap(),
            engine::indbh_k_fast(&p, alpha, &g, 2).unwrap(),
            engine::indbh_k_fast(&p, alpha, &g, 3).unwrap(),
            engine::indbh_k_fast(&p, alpha, &g, 4).unwrap(),
            su_fixed_point(&p, alpha, &g).unwrap(),
            bh(&p, alpha),
        ];
        for w in chain.windows(2) {
            prop_assert!(w[0].is_subset(&w[1]), "{} not in {}", w[0], w[1]);
        }
    }

    #[test]
    fn classical_procedures_are_nested(p in proptest::collection::vec(pvalue(), 1..40), alpha in select(vec![0.01, 0.05, 0.1, 0.5, 1.0])) {
        let p = PValues::new(p).unwrap();
        let b = bh(&p, alpha);
        prop_assert!(step_down_bh(&p, alpha).is_subset(&b));
        prop_assert!(by(&p, alpha).is_subset(&b));
        prop_assert!(bonferroni(&p, alpha).is_subset(&step_down_bh(&p, alpha)));
    }

    #[test]
    fn degenerate_graphs(p in proptest::collection::vec(pvalue(), 1..30), alpha in select(vec![0.05, 0.1, 0.3])) {
        let p = PValues::new(p).unwrap();
        let m = p.len();
        let empty = DependencyGraph::empty(m);
        let b = bh(&p, alpha);
        prop_assert_eq!(&engine::indbh_fast(&p, alpha, &empty).unwrap(), &b);
        prop_assert_eq!(&engine::indbh_k_fast(&p, alpha, &empty, 3).unwrap(), &b);
        if m <= 12 {
            prop_assert_eq!(&su_fixed_point(&p, alpha, &empty).unwrap(), &b);
        }
        let complete = DependencyGraph::complete(m);
        prop_assert_eq!(engine::indbh_fast(&p, alpha, &complete).unwrap(), bonferroni(&p, alpha));
    }

    #[test]
    fn adding_edges_never_grows_indbh((g, p, alpha) in instance(10), a in 0usize..10, b in 0usize..10) {
        let m = g.m();
        let (a, b) = (a % m, b % m);
        let mut edges: Vec<(usize, usize)> = g.edges().collect();
        edges.push((a, b));
        let denser = DependencyGraph::from_edges(m, &edges).unwrap();
        let sparse = engine::indbh_fast(&p, alpha, &g).unwrap();
        let dense = engine::indbh_fast(&p, alpha, &denser).unwrap();
        prop_assert!(dense.is_subset(&sparse));
    }

    #[test]
    fn randomized_prune_stays_inside_adjusted_set((g, p, alpha) in instance(9), u in proptest::collection::vec(0.0..=1.0f64, 9)) {
        let m = g.m();
        let cfg = EngineConfig::default();
        let level = Level::new(alpha, m);
        for inner in [Procedure::Bh, Procedure::IndBh, Procedure::IndBhK(2)] {
            let out = randomized_prune(&p, alpha, &g, &inner, &u[..m], &cfg).unwrap();
            let adj: Vec<usize> = (0..m)
                .filter(|&i| {
                    let r = depfdr::procedures::ProcedureSpec::new(inner.clone(), alpha)
                        .unwrap()
                        .run(&p.masked(g.neighbors(i)), Some(&g), &cfg)
                        .unwrap();
                    p[i] <= level.threshold(r.len() + usize::from(!r.contains(i)))
                })
                .collect();
            let adj = RejectionSet::from_indices(adj);
            prop_assert!(out.is_subset(&adj));
            let zeros = vec![0.0; m];
            prop_assert_eq!(randomized_prune(&p, alpha, &g, &inner, &zeros, &cfg).unwrap(), adj);
        }
    }

    #[test]
    fn unrejected_hypotheses_can_be_set_to_one((g, p, alpha) in instance(9), k in 1usize..=3) {
        let r = engine::indbh_k_fast(&p, alpha, &g, k).unwrap();
        for i in 0..g.m() {
            if !r.contains(i) {
                prop_assert_eq!(&engine::indbh_k_fast(&p.masked([i]), alpha, &g, k).unwrap(), &r);
            }
        }
    }

    #[test]
    fn closed_and_open_masking_agree_after_membership_check((g, p, alpha) in instance(8), k in 1usize..=3) {
        let m = g.m();
        let level = Level::new(alpha, m);
        let r = indbh_k_reference(&p, alpha, &g, k).unwrap();
        for i in 0..m {
            let open = indbh_k_reference(&p.masked(g.neighbors(i)), alpha, &g, k).unwrap();
            let via_open = p[i] <= level.threshold(open.len() + usize::from(!open.contains(i)));
            let closed = indbh_k_reference(&p.masked(g.closed_neighborhood(i)), alpha, &g, k).unwrap();
            let via_closed = r.contains(i) || p[i] <= level.threshold(1 + closed.len());
            prop_assert_eq!(via_open, via_closed, "node {}", i);
        }
    }

    #[test]
    fn table_matches_independence_numbers((g, p, alpha) in instance(12)) {
        let rp = engine::reduce_to_bh(&p, alpha, &g).unwrap();
        let t = engine::precompute_table(&rp, &EngineConfig::default()).unwrap();
        for (k, comp) in t.components().components.iter().enumerate() {
            for r in 1..=rp.n() {
                let q: Vec<usize> = comp.iter().copied().filter(|&j| (rp.rank(j) as usize) <= r).collect();
                let (sub, _) = rp.sub_graph.induced_subgraph(&q).unwrap();
                prop_assert_eq!(t.value(k, r), sub.independence_number(), "component {} r {}", k, r);
            }
        }
    }

    #[test]
    fn cheap_checks_are_sound((g, p, alpha) in instance(12), picks in proptest::collection::vec(any::<bool>(), 12)) {
        let rp = engine::reduce_to_bh(&p, alpha, &g).unwrap();
        let t0 = engine::precompute_table(&rp, &EngineConfig::default()).unwrap();
        let masked: Vec<usize> = (0..rp.n()).filter(|&j| picks[j]).collect();
        let t = engine::update_table(&t0, &rp, &masked);
        let (_, verdicts) = engine::cheap_checks(&t, &rp, &masked);
        let q = p.masked(masked.iter().map(|&j| rp.kept[j]));
        let truth = brute_force_indbh(&q, alpha, &g).unwrap();
        for (j, v) in verdicts.iter().enumerate() {
            let rejected = truth.contains(rp.kept[j]);
            match v {
                Verdict::Reject => prop_assert!(rejected, "node {} wrongly accepted", j),
                Verdict::NoReject => prop_assert!(!rejected, "node {} wrongly dropped", j),
                Verdict::Undecided => {}
            }
            let rank = if masked.contains(&j) { NO_RANK } else { rp.rank(j) };
            let beta = engine::beta_exact(&rp, &t, &masked, j);
            prop_assert_eq!(rank != NO_RANK && rank as usize <= beta, rejected, "beta for node {}", j);
        }
    }

    #[test]
    fn reduction_with_any_valid_bound((g, p, alpha) in instance(10), extra in 0usize..4) {
        let cfg = EngineConfig::default();
        let b = bh(&p, alpha).len();
        for r_bar in [b, (b + extra).min(g.m())] {
            let rp = engine::reduce_with_bound(&p, alpha, &g, r_bar).unwrap();
            for k in 1..=3 {
                let (red, _) = engine::solve_reduced(&rp, k, &cfg).unwrap();
                prop_assert_eq!(rp.to_original(&red), engine::indbh_k_fast(&p, alpha, &g, k).unwrap());
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results((g, p, alpha) in instance(12), k in 1usize..=3) {
        let one = EngineConfig { threads: Some(1), ..EngineConfig::default() };
        let four = EngineConfig { threads: Some(4), ..EngineConfig::default() };
        prop_assert_eq!(
            engine::indbh_k_fast_with(&p, alpha, &g, k, &one).unwrap(),
            engine::indbh_k_fast_with(&p, alpha, &g, k, &four).unwrap()
        );
    }

    #[test]
    fn graph_adapted_procedures_satisfy_all_three_properties((g, p, alpha) in instance(8), k in 1usize..=3, seed in any::<u64>()) {
        let f = |q: &PValues| engine::indbh_k_fast(q, alpha, &g, k).unwrap();
        let one = std::slice::from_ref(&p);
        prop_assert!(check_self_consistency(f, alpha, one).holds());
        prop_assert!(check_monotonicity(f, one, seed).holds());
        prop_assert!(check_neighbor_blindness(f, &g, one).holds());
        let su = |q: &PValues| su_fixed_point(q, alpha, &g).unwrap();
        prop_assert!(check_self_consistency(su, alpha, one).holds());
        prop_assert!(check_monotonicity(su, one, seed).holds());
        prop_assert!(check_neighbor_blindness(su, &g, one).holds());
    }
}
