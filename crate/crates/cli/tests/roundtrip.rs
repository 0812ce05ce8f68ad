use hypiso::bcs::{magic_square_graphs, magic_square_strategy, neighborhood_pullback};
use hypiso::game::{build_graph_iso_game, Correlation};
use hypiso::hypergraph::lambda_nk;
use hypiso::supergame::{relabeling_sns_strategy, uniform_sns_correlation, RelabelingQuadruple};
use hypiso_cli::io::{
    correlation_from_str, correlation_to_string, game_from_str, game_to_string, gamma_from_str, gamma_to_string,
    graph_from_str, graph_to_string, hypergraph_from_str, hypergraph_to_string, strategy_from_str, strategy_to_string,
    Gamma, Strategy,
};
use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

#[test]
fn magic_square_objects_round_trip() {
    let (g, g0) = magic_square_graphs().unwrap();
    assert_eq!(graph_from_str(&graph_to_string(&g)).unwrap(), g);
    let u = magic_square_strategy().unwrap();
    let (n1, _, rep) = neighborhood_pullback(&u, &g, &g0).unwrap();
    assert_eq!(hypergraph_from_str(&hypergraph_to_string(&n1)).unwrap(), n1);
    let s = Strategy::from_rep(&rep);
    assert_eq!(strategy_from_str(&strategy_to_string(&s)).unwrap(), s);
}

#[test]
fn games_and_gammas_round_trip() {
    let (g, _) = magic_square_graphs().unwrap();
    let iso = build_graph_iso_game(&g, &g).unwrap();
    assert_eq!(game_from_str(&game_to_string(&iso)).unwrap(), iso);
    let copy = game_from_str(r#"{"X":["0","1"],"Y":["0"],"A":["0","1"],"B":["0"],"lambda":[[0,0,0,0],[1,0,1,0]]}"#).unwrap();
    let gamma = relabeling_sns_strategy(&RelabelingQuadruple::identity(&copy), &copy, &copy).unwrap();
    let g = Gamma {
        game1: copy.clone(),
        game2: copy.clone(),
        gamma,
    };
    assert_eq!(gamma_from_str(&gamma_to_string(&g)).unwrap(), g);
    let u = Gamma {
        gamma: uniform_sns_correlation(&copy, &copy),
        ..g
    };
    assert_eq!(gamma_from_str(&gamma_to_string(&u)).unwrap(), u);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn lambda_round_trip(n in 1usize..6, k in 1usize..4) {
        let h = lambda_nk(n, k).unwrap();
        prop_assert_eq!(hypergraph_from_str(&hypergraph_to_string(&h)).unwrap(), h);
    }

    #[test]
    fn correlation_round_trip(values in proptest::collection::vec(-1.0e3f64..1.0e3, 24)) {
        let l = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let mut k = 0;
        let c = Correlation::from_fn(l("x", 2), l("y", 3), l("a", 2), l("b", 2), |_, _, _, _| {
            k += 1;
            if k % 5 == 0 { 0.0 } else { values[k - 1] }
        });
        let game = hypiso::game::NonlocalGame::from_fn(l("x", 2), l("y", 3), l("a", 2), l("b", 2), |_, _, _, _| true).unwrap();
        prop_assert_eq!(correlation_from_str(&correlation_to_string(&c), &game).unwrap(), c);
    }
}
