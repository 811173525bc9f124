use std::collections::HashMap;

use num::One;

use super::bijection::{check_pair, LeafBijection, LeafTable};
use super::{aggregate_errors, choose_delta, compute_leaf_errors, match_tables, AbstractionMap, CrswfError, PairErrors};
use crate::efg::{GameTree, Rational};

/// How δ is picked for pairs whose map does not fix it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeltaPolicy {
    /// δ = 1.
    #[default]
    Unit,
    /// The minimizer of the largest leaf reward error.
    Optimize,
}

/// Error terms for every ordered pair of distinct sets sharing a class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub pairs: Vec<PairErrors>,
    /// The leaf bijection behind each entry of `pairs`.
    pub bijections: Vec<LeafBijection>,
    index: HashMap<(usize, usize), usize>,
}

impl ErrorReport {
    pub fn pair(&self, from: usize, to: usize) -> Option<&PairErrors> {
        self.index.get(&(from, to)).map(|&k| &self.pairs[k])
    }

    pub fn bijection(&self, from: usize, to: usize) -> Option<&LeafBijection> {
        self.index.get(&(from, to)).map(|&k| &self.bijections[k])
    }

    /// True when every error term of every pair is zero.
    pub fn is_lossless(&self) -> bool {
        self.pairs.iter().all(|p| {
            p.distribution == 0.0
                && p.leaves.iter().all(|l| l.reward == 0.0 && l.transition == 0.0)
                && p.nodes.iter().all(|n| n.distribution == 0.0)
        })
    }
}

/// Is the map a pure merge of original sets with matching owner and labels
/// over a perfect-recall game?
pub fn check_refinement(game: &GameTree, map: &AbstractionMap) -> bool {
    if map.class_assignment().len() != game.infosets.len() || !game.is_perfect_recall() {
        return false;
    }
    map.classes()
        .iter()
        .all(|c| c.iter().all(|&m| check_pair(game, c[0], m).is_ok()))
}

/// Verification with δ = 1 wherever the map does not fix it.
pub fn verify_crswf(game: &GameTree, map: &AbstractionMap) -> Result<ErrorReport, CrswfError> {
    verify_crswf_with(game, map, DeltaPolicy::Unit)
}

/// Checks Def. 3 for every intra-class pair and computes all error terms.
pub fn verify_crswf_with(
    game: &GameTree,
    map: &AbstractionMap,
    policy: DeltaPolicy,
) -> Result<ErrorReport, CrswfError> {
    if let Some(p) = (0..game.num_players).find(|&p| !game.has_perfect_recall_for(p)) {
        return Err(CrswfError::NoPerfectRecall(p));
    }
    let reach = game.chance_reach_all();
    let mut report = ErrorReport::default();
    for class in map.classes().iter().filter(|c| c.len() > 1) {
        for &m in class {
            check_pair(game, class[0], m)?;
        }
        let tables: Vec<LeafTable> = class
            .iter()
            .map(|&m| LeafTable::new(game, map.class_assignment(), m))
            .collect();
        for (x, a) in class.iter().enumerate() {
            for (y, b) in class.iter().enumerate() {
                if x == y {
                    continue;
                }
                let phi = match_tables(game, &tables[x], &tables[y])?;
                let (delta, undefined) = match (map.delta(*a, *b), policy) {
                    (Some(d), _) => (d.clone(), false),
                    (None, DeltaPolicy::Unit) => (Rational::one(), false),
                    (None, DeltaPolicy::Optimize) => {
                        let c = choose_delta(game, &phi);
                        (c.delta, c.undefined)
                    }
                };
                let leaves = compute_leaf_errors(game, &phi, &delta);
                let mut pair = aggregate_errors(game, &phi, &delta, leaves, &reach);
                pair.delta_undefined = undefined;
                report.index.insert((*a, *b), report.pairs.len());
                report.pairs.push(pair);
                report.bijections.push(phi);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::make_figure1_game;

    #[test]
    fn figure1_error_values() {
        let (g, map) = make_figure1_game();
        let report = verify_crswf_with(&g, &map, DeltaPolicy::Optimize).unwrap();
        let set = |id: &str| g.infoset_by_id(id).unwrap();
        let node = |id: &str| g.nodes.iter().position(|n| n.id == id).unwrap();
        let p2 = report.pair(set("P2x"), set("P2y")).unwrap();
        let left = p2.node(node("p2x")).unwrap();
        assert!((left.transition - 2.0).abs() < 1e-9, "{}", left.transition);
        assert!((left.reward - 0.5).abs() < 1e-9, "{}", left.reward);
        let p1 = report.pair(set("P1xa"), set("P1ya")).unwrap();
        assert!((p1.distribution - 2.0).abs() < 1e-9, "{}", p1.distribution);
        assert!(p1.nodes.iter().all(|n| n.transition == 0.0 && n.reward == 0.0));
        assert!(p1.nodes.iter().all(|n| (n.distribution - 0.1).abs() < 1e-12));
    }

    #[test]
    fn figure1_bijection_pairs_case_mates() {
        let (g, map) = make_figure1_game();
        let set = |id: &str| g.infoset_by_id(id).unwrap();
        let phi = super::super::find_leaf_bijection(&g, &map, set("P2x"), set("P2y")).unwrap();
        let id = |n: usize| g.nodes[n].id.as_str();
        let pairs: Vec<(&str, &str)> = phi.leaves.iter().map(|&(a, b)| (id(a), id(b))).collect();
        assert!(pairs.contains(&("p2xahl", "p2yahl")));
        assert!(pairs.contains(&("p2xbtR", "p2ybtR")));
        let mut back = phi.inverse().inverse().leaves;
        let mut orig = phi.leaves.clone();
        back.sort_unstable();
        orig.sort_unstable();
        assert_eq!(back, orig);
    }

    #[test]
    fn identity_and_refinement() {
        let (g, map) = make_figure1_game();
        assert!(check_refinement(&g, &map));
        assert!(check_refinement(&g, &AbstractionMap::identity(&g)));
        let report = verify_crswf(&g, &AbstractionMap::identity(&g)).unwrap();
        assert!(report.pairs.is_empty() && report.is_lossless());
        let set = |id: &str| g.infoset_by_id(id).unwrap();
        let bad = AbstractionMap::from_classes(&g, vec![("m".into(), vec![set("P1xa"), set("P1xb")])]).unwrap();
        assert!(!check_refinement(&g, &bad));
        assert!(matches!(verify_crswf(&g, &bad), Err(CrswfError::NotMergeable { .. })));
    }

    #[test]
    fn self_pair_with_unit_delta_is_lossless() {
        let (g, _) = make_figure1_game();
        let set = g.infoset_by_id("P2x").unwrap();
        let phi = LeafBijection::identity(&g, set);
        let leaves = compute_leaf_errors(&g, &phi, &Rational::one());
        let e = aggregate_errors(&g, &phi, &Rational::one(), leaves, &g.chance_reach_all());
        assert_eq!(e.distribution, 0.0);
        assert!(e.nodes.iter().all(|n| n.reward == 0.0 && n.transition == 0.0));
    }
}
