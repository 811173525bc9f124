use std::collections::HashMap;

use num::ToPrimitive;

use super::LeafBijection;
use crate::efg::{GameTree, Owner, Rational};

/// Errors at one leaf z of I against φ(z).
#[derive(Clone, Debug, PartialEq)]
pub struct LeafErrors {
    pub leaf: usize,
    pub image: usize,
    /// ε^R(z) = max_i |u_i(z) − δ·u_i(φ(z))|
    pub reward: f64,
    /// ε^0(z) = |π₀(z[I], z) − π₀(φ(z)[Ĭ], φ(z))|
    pub transition: f64,
}

/// Aggregate errors at one node s of I.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeErrors {
    pub node: usize,
    pub image: usize,
    /// ε^D(s)
    pub distribution: f64,
    /// ε^R(s)
    pub reward: f64,
    /// ε^0(s), already multiplied by ū(s).
    pub transition: f64,
    /// ū(s)
    pub ubar: f64,
}

/// Every error term of one ordered pair (I, Ĭ).
#[derive(Clone, Debug, PartialEq)]
pub struct PairErrors {
    pub from: usize,
    pub to: usize,
    pub delta: Rational,
    /// Set when δ was meant to be optimized but no positive minimizer exists.
    pub delta_undefined: bool,
    pub leaves: Vec<LeafErrors>,
    pub nodes: Vec<NodeErrors>,
    /// ε^D = Σ_s ε^D(s)·ū(s)
    pub distribution: f64,
}

impl PairErrors {
    pub fn max_reward(&self) -> f64 {
        self.nodes.iter().map(|n| n.reward).fold(0.0, f64::max)
    }

    pub fn max_transition(&self) -> f64 {
        self.nodes.iter().map(|n| n.transition).fold(0.0, f64::max)
    }

    pub fn node(&self, s: usize) -> Option<&NodeErrors> {
        self.nodes.iter().find(|n| n.node == s)
    }
}

fn chance_prob_f(game: &GameTree, from: usize, to: usize) -> f64 {
    game.path_between(from, to)
        .into_iter()
        .filter(|&(n, _)| game.nodes[n].is_chance())
        .map(|(n, a)| game.nodes[n].probs_f[a])
        .product()
}

/// ε^R and ε^0 at every leaf of I under φ and δ.
pub fn compute_leaf_errors(game: &GameTree, phi: &LeafBijection, delta: &Rational) -> Vec<LeafErrors> {
    let d = delta.to_f64().unwrap_or(1.0);
    let head_of: HashMap<usize, usize> = phi.nodes.iter().copied().collect();
    let mut by_leaf: HashMap<usize, usize> = HashMap::new();
    for &(s, _) in &phi.nodes {
        for z in game.leaves_below(s) {
            by_leaf.insert(z, s);
        }
    }
    phi.leaves
        .iter()
        .map(|&(z, w)| {
            let reward = game.nodes[z]
                .utils_f
                .iter()
                .zip(&game.nodes[w].utils_f)
                .map(|(a, b)| (a - d * b).abs())
                .fold(0.0, f64::max);
            let s = by_leaf[&z];
            let transition = (chance_prob_f(game, s, z) - chance_prob_f(game, head_of[&s], w)).abs();
            LeafErrors {
                leaf: z,
                image: w,
                reward,
                transition,
            }
        })
        .collect()
}

/// ε^R(s) by the recursive case split over the subtree of s.
fn reward_error_at(game: &GameTree, s: usize, leaf_reward: &HashMap<usize, f64>) -> f64 {
    let end = game.subtree_end(s);
    let mut v = vec![0.0; end - s];
    for n in (s..end).rev() {
        let node = &game.nodes[n];
        v[n - s] = match node.owner {
            Owner::Leaf => leaf_reward[&n],
            Owner::Chance => node.children.iter().zip(&node.probs_f).map(|(&c, p)| p * v[c - s]).sum(),
            Owner::Player(_) => node.children.iter().map(|&c| v[c - s]).fold(0.0, f64::max),
        };
    }
    v[0]
}

/// Max over player-action continuation sequences from s of the summed leaf
/// transition errors; sequences are told apart by (information set, action).
fn transition_sum_at(game: &GameTree, s: usize, leaf_transition: &HashMap<usize, f64>) -> f64 {
    let mut groups: HashMap<Vec<(usize, usize)>, f64> = HashMap::new();
    for z in game.leaves_below(s) {
        let seq: Vec<(usize, usize)> = game
            .path_between(s, z)
            .into_iter()
            .filter(|&(n, _)| {
                let node = &game.nodes[n];
                !node.dummy && matches!(node.owner, Owner::Player(_))
            })
            .map(|(n, a)| (game.nodes[n].infoset.unwrap(), a))
            .collect();
        *groups.entry(seq).or_default() += leaf_transition[&z];
    }
    groups.into_values().fold(0.0, f64::max)
}

fn set_reach(game: &GameTree, reach: &[f64], set: usize) -> f64 {
    game.infosets[set].nodes.iter().map(|&s| reach[s]).sum()
}

/// Conditional chance distribution over the nodes of a set; uniform when
/// the set is unreachable by chance.
fn conditional(game: &GameTree, reach: &[f64], set: usize, s: usize) -> f64 {
    let total = set_reach(game, reach, set);
    if total > 0.0 {
        reach[s] / total
    } else {
        1.0 / game.infosets[set].nodes.len() as f64
    }
}

/// Node-level and pair-level aggregates from the leaf errors.
pub fn aggregate_errors(
    game: &GameTree,
    phi: &LeafBijection,
    delta: &Rational,
    leaves: Vec<LeafErrors>,
    reach: &[f64],
) -> PairErrors {
    let leaf_reward: HashMap<usize, f64> = leaves.iter().map(|l| (l.leaf, l.reward)).collect();
    let leaf_transition: HashMap<usize, f64> = leaves.iter().map(|l| (l.leaf, l.transition)).collect();
    let mut nodes = Vec::with_capacity(phi.nodes.len());
    let mut distribution = 0.0;
    for &(s, t) in &phi.nodes {
        let ubar = game
            .leaves_below(s)
            .into_iter()
            .map(|z| game.nodes[z].utils_f.iter().copied().fold(0.0, f64::max) + leaf_reward[&z])
            .fold(0.0, f64::max);
        let eps_d = (conditional(game, reach, phi.from, s) - conditional(game, reach, phi.to, t)).abs();
        distribution += eps_d * ubar;
        nodes.push(NodeErrors {
            node: s,
            image: t,
            distribution: eps_d,
            reward: reward_error_at(game, s, &leaf_reward),
            transition: transition_sum_at(game, s, &leaf_transition) * ubar,
            ubar,
        });
    }
    PairErrors {
        from: phi.from,
        to: phi.to,
        delta: delta.clone(),
        delta_undefined: false,
        leaves,
        nodes,
        distribution,
    }
}
