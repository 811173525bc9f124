use std::collections::BTreeMap;

use crswf::crswf::{
    find_leaf_bijection, minimize_scaled_error, verify_crswf, verify_crswf_with, AbstractionMap, CrswfError,
    DeltaPolicy,
};
use crswf::efg::{GameTree, Rational, SeqFilter, SeqStep, SequenceSignature};
use crswf::games::{make_drp, make_random_game, RandomGameSpec};
use num::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Key = (SequenceSignature, SequenceSignature, Vec<String>);

/// Leaf keys of a set, built from the generic sequence extractors.
fn key_multiset(game: &GameTree, class_of: &[usize], set: usize) -> BTreeMap<Key, usize> {
    let player = game.infosets[set].player;
    let mut out = BTreeMap::new();
    for z in game.leaves().filter(|&z| game.predecessor_in(set, z).is_some()) {
        let s = game.predecessor_in(set, z).unwrap();
        let others = game.sequence(z, SeqFilter::ExcludingPlayerAndChance(player)).mapped(class_of);
        let own = game.sequence_between(s, z, SeqFilter::Only(player)).mapped(class_of);
        let nature = game
            .sequence_between(s, z, SeqFilter::All)
            .0
            .into_iter()
            .filter_map(|st| match st {
                SeqStep::Chance { label } => Some(label),
                _ => None,
            })
            .collect();
        *out.entry((others, own, nature)).or_insert(0) += 1;
    }
    out
}

fn set(game: &GameTree, id: &str) -> usize {
    game.infoset_by_id(id).unwrap_or_else(|| panic!("no set {id}"))
}

#[test]
fn drp_round_two_sets_pair_equal_continuations() {
    let g = make_drp(3).unwrap();
    let (a, b) = (set(&g, "P1:2.1:cc/"), set(&g, "P1:3.1:cc/"));
    // Player 1's later round-two sets must be merged alongside the head.
    let classes = ["", "cr", "rr"]
        .iter()
        .map(|h| (format!("m{h}"), vec![set(&g, &format!("P1:2.1:cc/{h}")), set(&g, &format!("P1:3.1:cc/{h}"))]))
        .collect();
    let map = AbstractionMap::from_classes(&g, classes).unwrap();
    let phi = find_leaf_bijection(&g, &map, a, b).unwrap();
    assert_eq!(key_multiset(&g, map.class_assignment(), a), key_multiset(&g, map.class_assignment(), b));
    for &(z, w) in &phi.leaves {
        // Same opponent roll, same betting: the ids differ only in player 1's round-one roll.
        let (zi, wi) = (&g.nodes[z].id, &g.nodes[w].id);
        assert_eq!(zi.len(), wi.len());
        assert_eq!(zi.chars().zip(wi.chars()).filter(|(x, y)| x != y).count(), 1, "{zi} {wi}");
    }
    let report = verify_crswf(&g, &map).unwrap();
    assert!(report.pair(a, b).unwrap().leaves.iter().any(|l| l.reward > 0.0));
}

#[test]
fn identity_abstraction_of_drp_is_lossless() {
    let g = make_drp(3).unwrap();
    let report = verify_crswf(&g, &AbstractionMap::identity(&g)).unwrap();
    assert!(report.is_lossless());
}

#[test]
fn verify_accepts_exactly_key_matching_drp_merges() {
    let g = make_drp(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut by_shape: BTreeMap<(usize, Vec<String>), Vec<usize>> = BTreeMap::new();
    for (i, s) in g.infosets.iter().enumerate().filter(|(_, s)| s.id.starts_with('P')) {
        by_shape.entry((s.player, s.actions.clone())).or_default().push(i);
    }
    let shapes: Vec<&Vec<usize>> = by_shape.values().filter(|v| v.len() > 1).collect();
    let (mut accepted, mut rejected) = (0, 0);
    for _ in 0..60 {
        let pool = shapes[rng.gen_range(0..shapes.len())];
        let a = pool[rng.gen_range(0..pool.len())];
        let mut b = pool[rng.gen_range(0..pool.len())];
        while b == a {
            b = pool[rng.gen_range(0..pool.len())];
        }
        let map = AbstractionMap::from_classes(&g, vec![("m".into(), vec![a, b])]).unwrap();
        let class_of = map.class_assignment();
        let oracle = key_multiset(&g, class_of, a) == key_multiset(&g, class_of, b);
        let got = verify_crswf(&g, &map);
        assert_eq!(got.is_ok(), oracle, "{} {}", g.infosets[a].id, g.infosets[b].id);
        if oracle {
            accepted += 1;
        } else {
            rejected += 1;
            assert!(matches!(
                got,
                Err(CrswfError::Condition { .. } | CrswfError::LeafCount { .. })
            ));
        }
    }
    assert!(accepted > 0 && rejected > 0, "{accepted} {rejected}");
}

#[test]
fn random_group_merges_verify() {
    for seed in 0..30 {
        let mut spec = RandomGameSpec::new(seed);
        spec.depth = 1 + seed as usize % 4;
        spec.branching = 2 + seed as usize % 2;
        let r = make_random_game(&spec);
        let map = r.merge_all();
        let report = verify_crswf_with(&r.game, &map, DeltaPolicy::Optimize).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        for p in &report.pairs {
            assert!(p.distribution >= 0.0);
            for n in &p.nodes {
                let leaf_max = r.game.leaves_below(n.node).iter()
                    .flat_map(|&z| r.game.nodes[z].utils_f.clone())
                    .fold(0.0, f64::max);
                assert!(n.ubar >= leaf_max);
                assert!(n.reward >= 0.0 && n.transition >= 0.0 && n.distribution >= 0.0);
            }
        }
    }
}

#[test]
fn unit_delta_errors_are_symmetric() {
    let r = make_random_game(&RandomGameSpec::new(5));
    let map = r.merge_all();
    let report = verify_crswf(&r.game, &map).unwrap();
    for p in &report.pairs {
        let back = report.pair(p.to, p.from).unwrap();
        for l in &p.leaves {
            let m = back.leaves.iter().find(|m| m.leaf == l.image).unwrap();
            assert_eq!(m.image, l.leaf);
            assert!((m.reward - l.reward).abs() < 1e-12);
            assert!((m.transition - l.transition).abs() < 1e-12);
        }
    }
}

fn grid_min(pairs: &[(Rational, Rational)]) -> f64 {
    let f: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a.to_f64().unwrap(), b.to_f64().unwrap())).collect();
    (1..=10_000)
        .map(|k| {
            let d = k as f64 * 0.01;
            f.iter().map(|(a, b)| (a - d * b).abs()).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choose_delta_matches_grid_search(v in prop::collection::vec((0i64..50, 1i64..50), 5)) {
        let pairs: Vec<(Rational, Rational)> = v.iter().map(|&(a, b)| (Rational::from_integer(a.into()), Rational::from_integer(b.into()))).collect();
        let c = minimize_scaled_error(&pairs);
        let grid = grid_min(&pairs);
        let bmax = v.iter().map(|p| p.1).max().unwrap() as f64;
        prop_assert!(c.error <= grid + 1e-9);
        prop_assert!(grid <= c.error + 0.01 * bmax + 1e-9);
        let d = c.delta.to_f64().unwrap();
        let at = pairs.iter().map(|(a, b)| (a.to_f64().unwrap() - d * b.to_f64().unwrap()).abs()).fold(0.0, f64::max);
        prop_assert!((at - c.error).abs() < 1e-9);
    }
}
