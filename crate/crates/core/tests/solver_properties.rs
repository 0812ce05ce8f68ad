use hypiso::game::{build_hypiso_game, is_bisynchronous, is_perfect_strategy, referee_value, referee_value_exact, IsoRule};
use hypiso::hypergraph::{EdgeRelation, Hypergraph, SimpleGraph, VertexRelation};
use hypiso::operator::{correlation_from_rep, pvm_table_from_rep, FiniteDimRep};
use hypiso::solver::{
    deterministic_strategy, enumerate_graph_isomorphisms, enumerate_isomorphisms, find_graph_isomorphism,
    find_hypergraph_isomorphism, verify_graph_isomorphism, verify_intertwiner,
};
use num_traits::One;
use proptest::prelude::*;

/// Edges as bit masks over `n` vertices; uncovered vertices are added to the last edge.
fn hypergraph(n: usize, masks: &[u8], prefix: &str) -> Hypergraph {
    let full = (1u16 << n) - 1;
    let mut masks: Vec<u16> = masks.iter().map(|&m| (m as u16 & full).max(1)).collect();
    let covered = masks.iter().fold(0, |a, &m| a | m);
    *masks.last_mut().unwrap() |= full & !covered;
    let vs: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let edges = masks.iter().enumerate().map(|(e, &m)| {
        let members: Vec<String> = (0..n).filter(|v| m >> v & 1 == 1).map(|v| vs[v].clone()).collect();
        (format!("{prefix}e{e}"), members)
    });
    Hypergraph::new(vs.clone(), edges).unwrap()
}

fn graph(n: usize, bits: &[bool]) -> SimpleGraph {
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k] {
                edges.push((i.to_string(), j.to_string()));
            }
            k += 1;
        }
    }
    SimpleGraph::new((0..n).map(|i| i.to_string()), &edges).unwrap()
}

fn arb_hypergraph_pair() -> impl Strategy<Value = (Hypergraph, Hypergraph)> {
    (1usize..=6, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            Just(n),
            proptest::collection::vec(any::<u8>(), m),
            proptest::collection::vec(any::<u8>(), m),
            any::<bool>(),
        )
            .prop_map(|(n, a, b, same)| {
                let h1 = hypergraph(n, &a, "");
                // half the time the second input is a relabeled copy
                let h2 = if same {
                    let mut rev = a.clone();
                    rev.reverse();
                    let mirrored: Vec<u8> = rev.iter().map(|m| reverse_bits(*m, n)).collect();
                    hypergraph(n, &mirrored, "x")
                } else {
                    hypergraph(n, &b, "x")
                };
                (h1, h2)
            })
    })
}

fn reverse_bits(m: u8, n: usize) -> u8 {
    (0..n).filter(|i| m >> i & 1 == 1).fold(0, |acc, i| acc | 1 << (n - 1 - i))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn find_is_sound_complete_and_symmetric((h1, h2) in arb_hypergraph_pair()) {
        let found = find_hypergraph_isomorphism(&h1, &h2);
        let brute = enumerate_isomorphisms(&h1, &h2, 1);
        prop_assert_eq!(found.is_some(), !brute.is_empty());
        prop_assert_eq!(found.is_some(), find_hypergraph_isomorphism(&h2, &h1).is_some());
        if let Some(pair) = found {
            prop_assert!(verify_intertwiner(&pair, &h1, &h2).unwrap());
            for (v, &w) in pair.vertex_map.iter().enumerate() {
                prop_assert_eq!(h1.structure().degree(v), h2.structure().degree(w));
            }
            for (e, &f) in pair.edge_map.iter().enumerate() {
                prop_assert_eq!(h1.structure().members(e).len(), h2.structure().members(f).len());
            }
            // the deterministic strategy is perfect and scores 1
            let rule = IsoRule::hypergraph(&h1, &h2);
            let corr = deterministic_strategy(&pair, &rule).unwrap();
            prop_assert!(is_perfect_strategy(&rule, &corr, 0.0).unwrap().perfect);
            let game = build_hypiso_game(&h1, &h2).unwrap();
            prop_assert!(is_bisynchronous(&game).unwrap());
            prop_assert!((referee_value(&game, &corr, None).unwrap() - 1.0).abs() <= 1e-12);
            prop_assert!(referee_value_exact(&game, &corr, None).unwrap().is_one());
            // the trace correlation of the scalar representation is the same table
            let rep = FiniteDimRep::from_pair(&pair, &h1, &h2).unwrap();
            let from_rep = correlation_from_rep(&pvm_table_from_rep(&rep, &rule).unwrap()).unwrap();
            prop_assert_eq!(from_rep.values(), corr.values());
        }
    }

    #[test]
    fn every_enumerated_witness_verifies((h1, h2) in arb_hypergraph_pair()) {
        let all = enumerate_isomorphisms(&h1, &h2, 50);
        for pair in &all {
            prop_assert!(verify_intertwiner(pair, &h1, &h2).unwrap());
        }
        let mut sorted = all.clone();
        sorted.sort_by(|a, b| (&a.vertex_map, &a.edge_map).cmp(&(&b.vertex_map, &b.edge_map)));
        prop_assert_eq!(sorted, all);
    }

    #[test]
    fn graph_search_matches_brute_force(n in 1usize..=7, bits in proptest::collection::vec(any::<bool>(), 21), shift in 0usize..7) {
        let g1 = graph(n, &bits);
        // rotate vertex names to get an isomorphic copy
        let edges: Vec<(String, String)> = g1
            .edge_list()
            .into_iter()
            .map(|(a, b)| (((a + shift) % n).to_string(), ((b + shift) % n).to_string()))
            .collect();
        let g2 = SimpleGraph::new((0..n).map(|i| i.to_string()), &edges).unwrap();
        let found = find_graph_isomorphism(&g1, &g2);
        prop_assert!(found.is_some());
        prop_assert!(verify_graph_isomorphism(&found.unwrap(), &g1, &g2).unwrap());
        let other = graph(n, &bits.iter().map(|b| !b).collect::<Vec<_>>());
        prop_assert_eq!(find_graph_isomorphism(&g1, &other).is_some(), !enumerate_graph_isomorphisms(&g1, &other, 1).is_empty());
    }

    #[test]
    fn relation_classifiers_are_consistent(n in 1usize..=6, masks in proptest::collection::vec(any::<u8>(), 1..5)) {
        let h = hypergraph(n, &masks, "");
        let s = h.structure();
        let inc = h.incidence_matrix();
        for v in 0..n {
            prop_assert_eq!(s.degree(v) as i64, inc.row(v).iter().sum::<i64>());
            for w in 0..n {
                let shared = (0..s.num_edges()).any(|e| s.contains(v, e) && s.contains(w, e));
                let expected = if v == w { VertexRelation::Equal } else if shared { VertexRelation::Adjacent } else { VertexRelation::DistinctNonAdjacent };
                prop_assert_eq!(s.vertex_relation(v, w), expected);
            }
        }
        for e in 0..s.num_edges() {
            for f in 0..s.num_edges() {
                let meet = (0..n).any(|v| s.contains(v, e) && s.contains(v, f));
                let expected = if e == f { EdgeRelation::Equal } else if meet { EdgeRelation::Intersecting } else { EdgeRelation::Disjoint };
                prop_assert_eq!(s.edge_relation(e, f), expected);
            }
        }
    }
}
