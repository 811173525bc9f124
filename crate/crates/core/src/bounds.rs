//! Solution-quality bounds for strategies computed in a CRSWF abstraction.

use num::ToPrimitive;
use thiserror::Error;

use crate::crswf::{AbstractionMap, ErrorReport, PairErrors};
use crate::efg::{compute_reach, GameTree, Owner, ReachTable, StrategyError, StrategyProfile};

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("the original game has no perfect recall for player {}", .0 + 1)]
    NoPerfectRecall(usize),
    #[error("{expected} abstract regrets needed, {found} given")]
    Regrets { expected: usize, found: usize },
    #[error("error report has no entry for ({0}, {1})")]
    MissingPair(String, String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// The terms of ψ(I) at the maximizing Ĭ.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiTerms {
    pub infoset: usize,
    /// The maximizing Ĭ.
    pub partner: usize,
    /// δ_{I,Ĭ}·r(f_I)
    pub regret: f64,
    /// 2·Σ_s w(s)·(ε^0(s) + ε^R(s))
    pub errors: f64,
    /// ε^D_{I,Ĭ}
    pub distribution: f64,
    pub psi: f64,
    /// π^σ_{-i}(I); 1 for the strategy-agnostic bound.
    pub weight: f64,
}

/// Choices behind a player's bound.
#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    /// (information set, action) for every set the maximizing sequence reaches.
    Sets(Vec<(usize, usize)>),
    /// (node, action) at every player node on the maximizing subtree.
    Nodes(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerBound {
    pub epsilon: f64,
    pub plan: Plan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub players: Vec<PlayerBound>,
    /// max_i ε_i
    pub epsilon: f64,
    /// ψ breakdown per original information set.
    pub psi: Vec<PsiTerms>,
}

impl BoundResult {
    /// Σ over the sets of a [`Plan::Sets`] of weight·ψ.
    pub fn plan_sum(&self, player: usize) -> Option<f64> {
        match &self.players[player].plan {
            Plan::Sets(p) => Some(p.iter().map(|&(i, _)| self.psi[i].weight * self.psi[i].psi).sum()),
            Plan::Nodes(_) => None,
        }
    }
}

fn check_recall(game: &GameTree) -> Result<(), BoundError> {
    match (0..game.num_players).find(|&p| !game.has_perfect_recall_for(p)) {
        Some(p) => Err(BoundError::NoPerfectRecall(p)),
        None => Ok(()),
    }
}

/// Node weights of a perfect-recall set: π^σ(s)/π^σ(I), falling back to
/// π_{-i}(s)/π_{-i}(I) and then to uniform when the set is unreachable.
fn node_weights(game: &GameTree, reach: &ReachTable, set: usize) -> Vec<f64> {
    let nodes = &game.infosets[set].nodes;
    let p = game.infosets[set].player;
    for table in [&reach.reach, &reach.others[p]] {
        let total: f64 = nodes.iter().map(|&s| table[s]).sum();
        if total > 0.0 {
            return nodes.iter().map(|&s| table[s] / total).collect();
        }
    }
    vec![1.0 / nodes.len() as f64; nodes.len()]
}

/// Largest bracket of ψ(I) over the partners Ĭ of I, given a function
/// that turns a pair's per-node (ε^0 + ε^R) into the weighted error term.
fn psi_with<F>(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
    set: usize,
    regret: f64,
    weighted: F,
) -> Result<PsiTerms, BoundError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = PsiTerms {
        infoset: set,
        partner: set,
        regret,
        errors: 0.0,
        distribution: 0.0,
        psi: regret,
        weight: 1.0,
    };
    for &other in map.members(map.class_of(set)) {
        if other == set {
            continue;
        }
        let pair = errors.pair(set, other).ok_or_else(|| {
            BoundError::MissingPair(game.infosets[set].id.clone(), game.infosets[other].id.clone())
        })?;
        let per_node: Vec<f64> = pair.nodes.iter().map(|n| n.transition + n.reward).collect();
        let scaled = pair.delta.to_f64().unwrap_or(1.0) * regret;
        let err = 2.0 * weighted(&per_node);
        let total = scaled + err + pair.distribution;
        if total > best.psi {
            best = PsiTerms {
                infoset: set,
                partner: other,
                regret: scaled,
                errors: err,
                distribution: pair.distribution,
                psi: total,
                weight: 1.0,
            };
        }
    }
    Ok(best)
}

/// ψ(I) under σ; `regrets` holds r(f_I) per abstract set (None for zero).
pub fn psi(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
    reach: &ReachTable,
    regrets: Option<&[f64]>,
    set: usize,
) -> Result<PsiTerms, BoundError> {
    let w = node_weights(game, reach, set);
    let r = regrets.map_or(0.0, |r| r[map.class_of(set)]);
    let mut t = psi_with(game, map, errors, set, r, |e| w.iter().zip(e).map(|(a, b)| a * b).sum())?;
    t.weight = reach.infoset_others(game, set);
    Ok(t)
}

/// The (set, action) of the closest own decision above `s`.
fn own_parent(game: &GameTree, s: usize, player: usize) -> Option<(usize, usize)> {
    let mut child = s;
    let mut cur = game.nodes[s].parent;
    while let Some(p) = cur {
        let node = &game.nodes[p];
        if node.owner == Owner::Player(player) {
            let a = node.children.iter().position(|&c| c == child).unwrap();
            return Some((node.infoset.unwrap(), a));
        }
        child = p;
        cur = node.parent;
    }
    None
}

/// max over own pure sequences of Σ weight(I)·ψ(I), by one pass over the
/// player's sets from the deepest up.
fn sequence_dp(game: &GameTree, player: usize, psi: &[PsiTerms]) -> PlayerBound {
    let mut sets: Vec<usize> = game.player_infosets(player).collect();
    sets.sort_by_key(|&i| std::cmp::Reverse(game.nodes[game.infosets[i].nodes[0]].depth));
    let parent: Vec<Option<(usize, usize)>> = (0..game.infosets.len())
        .map(|i| {
            if game.infosets[i].player == player {
                own_parent(game, game.infosets[i].nodes[0], player)
            } else {
                None
            }
        })
        .collect();
    let mut below: Vec<Vec<f64>> = game.infosets.iter().map(|s| vec![0.0; s.actions.len()]).collect();
    let mut value = vec![0.0; game.infosets.len()];
    let mut choice = vec![0usize; game.infosets.len()];
    let mut top = Vec::new();
    for &i in &sets {
        let (a, m) = below[i]
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (a, &v)| if v > acc.1 { (a, v) } else { acc });
        choice[i] = a;
        value[i] = psi[i].weight * psi[i].psi + m;
        match parent[i] {
            Some((p, pa)) => below[p][pa] += value[i],
            None => top.push(i),
        }
    }
    let epsilon = top.iter().map(|&i| value[i]).sum();
    // Walk the chosen sequence down from the top sets.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); game.infosets.len()];
    for &i in &sets {
        if let Some((p, pa)) = parent[i] {
            if pa == choice[p] {
                children[p].push(i);
            }
        }
    }
    let mut plan = Vec::new();
    let mut stack = top;
    stack.sort_unstable();
    while let Some(i) = stack.pop() {
        plan.push((i, choice[i]));
        stack.extend(children[i].iter().copied());
    }
    plan.sort_unstable();
    PlayerBound {
        epsilon,
        plan: Plan::Sets(plan),
    }
}

fn sigma_bound(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
    sigma: &StrategyProfile,
    regrets: Option<&[f64]>,
) -> Result<BoundResult, BoundError> {
    check_recall(game)?;
    if let Some(r) = regrets {
        if r.len() != map.num_classes() {
            return Err(BoundError::Regrets {
                expected: map.num_classes(),
                found: r.len(),
            });
        }
    }
    let reach = compute_reach(game, sigma)?;
    let psi = (0..game.infosets.len())
        .map(|i| psi(game, map, errors, &reach, regrets, i))
        .collect::<Result<Vec<_>, _>>()?;
    let players: Vec<PlayerBound> = (0..game.num_players).map(|p| sequence_dp(game, p, &psi)).collect();
    Ok(BoundResult {
        epsilon: players.iter().map(|p| p.epsilon).fold(0.0, f64::max),
        players,
        psi,
    })
}

/// Theorem 1: σ is an ε-self-trembling equilibrium of any perfect-recall
/// refinement. `regrets[c]` is the abstract immediate regret r(I′) of class c.
pub fn theorem1_bound(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
    sigma: &StrategyProfile,
    regrets: &[f64],
) -> Result<BoundResult, BoundError> {
    sigma_bound(game, map, errors, sigma, Some(regrets))
}

/// Theorem 2: the bound for an exact abstract equilibrium (no regret term).
pub fn theorem2_bound(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
    sigma: &StrategyProfile,
) -> Result<BoundResult, BoundError> {
    sigma_bound(game, map, errors, sigma, None)
}

/// Nature-weighted error term: Σ_s (π₀(s)/π₀(I))·e(s), uniform when the
/// set is unreachable by chance.
fn agnostic_weighted(game: &GameTree, chance: &[f64], set: usize, per_node: &[f64]) -> f64 {
    let nodes = &game.infosets[set].nodes;
    let total: f64 = nodes.iter().map(|&s| chance[s]).sum();
    if total > 0.0 {
        nodes.iter().zip(per_node).map(|(&s, e)| chance[s] / total * e).sum()
    } else {
        per_node.iter().sum::<f64>() / nodes.len() as f64
    }
}

/// The σ-free bracket of ψ for one ordered pair:
/// 2·Σ_s (π₀(s)/π₀(I))·(ε^0(s) + ε^R(s)) + ε^D.
pub fn psi_bracket(game: &GameTree, chance: &[f64], pair: &PairErrors) -> f64 {
    let per_node: Vec<f64> = pair.nodes.iter().map(|n| n.transition + n.reward).collect();
    2.0 * agnostic_weighted(game, chance, pair.from, &per_node) + pair.distribution
}

/// Strategy-free variant of [`theorem2_bound`]: player choices are maximized
/// and node errors inside a set are weighted by chance alone. It does not
/// bound [`theorem2_bound`] for every σ, since σ can concentrate weight on a
/// node that chance makes unlikely.
pub fn strategy_agnostic_bound(
    game: &GameTree,
    map: &AbstractionMap,
    errors: &ErrorReport,
) -> Result<BoundResult, BoundError> {
    check_recall(game)?;
    let chance = game.chance_reach_all();
    let psi = (0..game.infosets.len())
        .map(|i| psi_with(game, map, errors, i, 0.0, |e| agnostic_weighted(game, &chance, i, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = game.nodes.len();
    let mut players = Vec::new();
    for p in 0..game.num_players {
        let mut v = vec![0.0; n];
        let mut pick = vec![0usize; n];
        for s in (0..n).rev() {
            let node = &game.nodes[s];
            v[s] = match node.owner {
                Owner::Leaf => 0.0,
                Owner::Chance => node.children.iter().zip(&node.probs_f).map(|(&c, q)| q * v[c]).sum(),
                Owner::Player(q) => {
                    let (a, m) = node
                        .children
                        .iter()
                        .enumerate()
                        .fold((0, f64::MIN), |acc, (a, &c)| if v[c] > acc.1 { (a, v[c]) } else { acc });
                    pick[s] = a;
                    m + if q == p { psi[node.infoset.unwrap()].psi } else { 0.0 }
                }
            };
        }
        let mut plan = Vec::new();
        let mut stack = vec![game.root];
        while let Some(s) = stack.pop() {
            let node = &game.nodes[s];
            match node.owner {
                Owner::Leaf => {}
                Owner::Chance => stack.extend(node.children.iter().copied()),
                Owner::Player(q) => {
                    if q == p {
                        plan.push((s, pick[s]));
                    }
                    stack.push(node.children[pick[s]]);
                }
            }
        }
        plan.sort_unstable();
        players.push(PlayerBound {
            epsilon: v[game.root],
            plan: Plan::Nodes(plan),
        });
    }
    Ok(BoundResult {
        epsilon: players.iter().map(|p| p.epsilon).fold(0.0, f64::max),
        players,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crswf::verify_crswf;
    use crate::games::make_figure1_game;

    #[test]
    fn figure1_leftmost_set_psi_is_two() {
        let (g, map) = make_figure1_game();
        let report = verify_crswf(&g, &map).unwrap();
        let sigma = StrategyProfile::uniform(&g);
        let reach = compute_reach(&g, &sigma).unwrap();
        let set = g.infoset_by_id("P1xa").unwrap();
        let t = psi(&g, &map, &report, &reach, None, set).unwrap();
        assert!((t.psi - 2.0).abs() < 1e-12, "{t:?}");
        assert_eq!(t.errors, 0.0);
    }

    #[test]
    fn identity_map_has_zero_theorem2_bound() {
        let (g, _) = make_figure1_game();
        let map = AbstractionMap::identity(&g);
        let report = verify_crswf(&g, &map).unwrap();
        let sigma = StrategyProfile::uniform(&g);
        assert_eq!(theorem2_bound(&g, &map, &report, &sigma).unwrap().epsilon, 0.0);
        assert_eq!(strategy_agnostic_bound(&g, &map, &report).unwrap().epsilon, 0.0);
    }

    #[test]
    fn regret_count_is_checked() {
        let (g, map) = make_figure1_game();
        let report = verify_crswf(&g, &map).unwrap();
        let sigma = StrategyProfile::uniform(&g);
        assert!(matches!(
            theorem1_bound(&g, &map, &report, &sigma, &[0.0]),
            Err(BoundError::Regrets { .. })
        ));
    }

    #[test]
    fn figure1_bound_expands_by_hand() {
        // Player 1 (index 0): each P1 set is reached with π_{-1} = 1/2 · 1/2 · 1
        // under uniform play by player 2, so ε = Σ over the four sets.
        let (g, map) = make_figure1_game();
        let report = verify_crswf(&g, &map).unwrap();
        let sigma = StrategyProfile::uniform(&g);
        let b = theorem2_bound(&g, &map, &report, &sigma).unwrap();
        let expect: f64 = ["P1xa", "P1xb", "P1ya", "P1yb"]
            .iter()
            .map(|id| 0.25 * b.psi[g.infoset_by_id(id).unwrap()].psi)
            .sum();
        assert!((b.players[0].epsilon - expect).abs() < 1e-12);
        assert!((b.plan_sum(0).unwrap() - b.players[0].epsilon).abs() < 1e-12);
    }
}
