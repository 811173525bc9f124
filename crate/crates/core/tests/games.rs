use crswf::efg::{best_response, emit_game, node_values, parse_game, Owner, Rational, StrategyProfile};
use crswf::games::{make_cdrp, make_drp, DrpSpec};
use num::{BigInt, One, Zero};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Fold when facing a bet, otherwise check.
fn always_fold(game: &crswf::efg::GameTree) -> StrategyProfile {
    let mut sigma = StrategyProfile::uniform(game);
    for (i, set) in game.infosets.iter().enumerate() {
        let pick = set.actions.iter().position(|a| a == "f").or_else(|| set.actions.iter().position(|a| a == "c"));
        if let Some(a) = pick {
            sigma.dists[i] = vec![0.0; set.actions.len()];
            sigma.dists[i][a] = 1.0;
        }
    }
    sigma
}

#[test]
fn drp_payoffs_are_zero_sum_and_bounded_by_thirteen() {
    let g = make_drp(3).unwrap();
    assert_eq!(g.shift, vec![Rational::from_integer(13.into()); 2]);
    for z in g.leaves() {
        let u = &g.nodes[z].utils;
        let raw: Vec<Rational> = u.iter().zip(&g.shift).map(|(a, s)| a - s).collect();
        assert!((&raw[0] + &raw[1]).is_zero());
    }
    let max = g.leaves().map(|z| g.nodes[z].utils_f[0] - 13.0).fold(f64::MIN, f64::max);
    assert_eq!(max, 13.0);
}

#[test]
fn drp_has_perfect_recall_and_expected_set_counts() {
    let g = make_drp(3).unwrap();
    assert!(g.is_perfect_recall());
    // Round two: for each of 5 round-one continuations, each player has
    // 9 roll pairs times its round-two betting positions (P1: 3, P2: 3).
    let round_two: usize = g.infosets.iter().filter(|s| s.id.contains('/')).count();
    let round_one: usize = g.infosets.iter().filter(|s| !s.id.contains('/') && s.id.starts_with('P')).count();
    assert_eq!(round_one, 2 * 3 * 3);
    assert_eq!(round_two, 5 * 9 * 6);
}

#[test]
fn drp_round_trips_through_the_text_format() {
    let g = make_drp(6).unwrap();
    let text = emit_game(&g);
    assert_eq!(parse_game(&text).unwrap(), g);
}

#[test]
fn cdrp_probabilities_follow_the_correlation_formula() {
    let c = q(1, 200);
    let t = DrpSpec::correlated(6, c.clone()).pair_probabilities();
    assert_eq!(t[2][4], q(1, 36) - Rational::from_integer(2.into()) * &c);
    let total: Rational = t.iter().flatten().sum();
    assert!(total.is_one());
    for row in &t {
        assert_eq!(row.iter().sum::<Rational>(), q(1, 6));
    }
}

#[test]
fn cdrp_large_correlation_stays_a_distribution() {
    let t = DrpSpec::correlated(4, q(7, 100)).pair_probabilities();
    assert!(t.iter().flatten().all(|p| *p >= Rational::zero()));
    assert!(t.iter().flatten().sum::<Rational>().is_one());
}

#[test]
fn cdrp_without_correlation_is_drp() {
    let a = make_cdrp(&DrpSpec::correlated(3, Rational::zero())).unwrap();
    let b = make_drp(3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn always_folding_has_regret_one() {
    let g = make_drp(3).unwrap();
    let sigma = always_fold(&g);
    let v = node_values(&g, &sigma);
    for i in 0..2 {
        let br = best_response(&g, &sigma, i).unwrap();
        assert!((br.value - v[i][g.root] - 1.0).abs() < 1e-9, "player {i}");
    }
}

#[test]
fn root_is_a_decision_node() {
    let g = make_drp(2).unwrap();
    assert!(matches!(g.nodes[g.root].owner, Owner::Player(0)));
}
