//! Pairwise distances between the candidates of a group.

use std::collections::HashMap;

use num::rational::Ratio;
use num::{BigInt, ToPrimitive, Zero};

use super::{AbstractionError, ObjectiveTree, SlapGroup};
use crate::bounds::psi_bracket;
use crate::crswf::{aggregate_errors, compute_leaf_errors, match_tables, AbstractionMap, LeafBijection, LeafTable};
use crate::efg::{GameTree, Owner, Rational};

/// How δ is set between two candidates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeltaMode {
    /// δ = 1: the distances form a metric.
    #[default]
    Fixed,
    /// δ minimizing the pair's distance, per slot.
    Optimized,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf(usize),
    Chance(Vec<(usize, f64)>),
    Max(Vec<usize>),
}

/// ε^R recursion over one node's subtree, leaves given by aligned position.
#[derive(Clone, Debug)]
struct Program(Vec<Op>);

impl Program {
    fn new(game: &GameTree, s: usize, leaf_pos: &HashMap<usize, usize>) -> Self {
        let end = game.subtree_end(s);
        let ops = (s..end)
            .map(|n| {
                let node = &game.nodes[n];
                match node.owner {
                    Owner::Leaf => Op::Leaf(leaf_pos[&n]),
                    Owner::Chance => Op::Chance(node.children.iter().map(|&c| c - s).zip(node.probs_f.iter().copied()).collect()),
                    Owner::Player(_) => Op::Max(node.children.iter().map(|&c| c - s).collect()),
                }
            })
            .collect();
        Program(ops)
    }

    fn eval(&self, leaf: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.resize(self.0.len(), 0.0);
        for i in (0..self.0.len()).rev() {
            buf[i] = match &self.0[i] {
                Op::Leaf(j) => leaf[*j],
                Op::Chance(c) => c.iter().map(|&(k, p)| p * buf[k]).sum(),
                Op::Max(c) => c.iter().map(|&k| buf[k]).fold(0.0, f64::max),
            };
        }
        buf[0]
    }
}

/// One candidate's slot set seen through the group alignment.
#[derive(Clone, Debug)]
struct View {
    utils: Vec<Vec<f64>>,
    /// π₀(z[I], z) per aligned leaf.
    trans: Vec<f64>,
    /// π₀(s)/π₀(I) per aligned node.
    cond: Vec<f64>,
    /// Node weight inside the ψ bracket.
    lambda: Vec<f64>,
    programs: Vec<Program>,
}

/// Aligned data of one slot across all candidates of a group.
#[derive(Clone, Debug)]
struct Slot {
    tables: Vec<LeafTable>,
    views: Vec<View>,
    /// Upper bound on ū(s) for every pair, per aligned node.
    ubar: Vec<f64>,
    /// Per aligned node: leaf positions grouped by player-action sequence.
    leaf_groups: Vec<Vec<Vec<usize>>>,
    /// Aligned nodes sharing one weight normalization.
    node_groups: Vec<Vec<usize>>,
}

fn normalized(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / values.len() as f64; values.len()]
    }
}

fn chance_between(game: &GameTree, from: usize, to: usize) -> f64 {
    game.path_between(from, to)
        .into_iter()
        .filter(|&(n, _)| game.nodes[n].is_chance())
        .map(|(n, a)| game.nodes[n].probs_f[a])
        .product()
}

impl Slot {
    fn new(game: &GameTree, map: &AbstractionMap, chance: &[f64], sets: &[usize]) -> Result<Self, AbstractionError> {
        let tables: Vec<LeafTable> = sets.iter().map(|&i| LeafTable::new(game, map.class_assignment(), i)).collect();
        let base = match_tables(game, &tables[0], &tables[0])?;
        let ref_nodes = &game.infosets[sets[0]].nodes;
        let node_pos: HashMap<usize, usize> = ref_nodes.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        let mut leaf_node = vec![0; base.leaves.len()];
        let ref_leaf_pos: HashMap<usize, usize> = base.leaves.iter().enumerate().map(|(j, &(z, _))| (z, j)).collect();
        for (p, &s) in ref_nodes.iter().enumerate() {
            for z in game.leaves_below(s) {
                leaf_node[ref_leaf_pos[&z]] = p;
            }
        }
        let node_groups = vec![(0..ref_nodes.len()).collect::<Vec<usize>>()];
        let mut leaf_groups = Vec::with_capacity(ref_nodes.len());
        for &s in ref_nodes {
            let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for z in game.leaves_below(s) {
                let seq: Vec<(usize, usize)> = game
                    .path_between(s, z)
                    .into_iter()
                    .filter(|&(n, _)| !game.nodes[n].dummy && matches!(game.nodes[n].owner, Owner::Player(_)))
                    .map(|(n, a)| (game.nodes[n].infoset.unwrap(), a))
                    .collect();
                let g = *index.entry(seq).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(ref_leaf_pos[&z]);
            }
            leaf_groups.push(groups);
        }
        let mut views = Vec::with_capacity(sets.len());
        for table in &tables {
            let phi = match_tables(game, table, &tables[0])?;
            let mut nodes = vec![0; ref_nodes.len()];
            for &(s, r) in &phi.nodes {
                nodes[node_pos[&r]] = s;
            }
            let leaves: Vec<usize> = phi.leaves.iter().map(|l| l.0).collect();
            let leaf_pos: HashMap<usize, usize> = leaves.iter().enumerate().map(|(j, &z)| (z, j)).collect();
            let reach: Vec<f64> = nodes.iter().map(|&s| chance[s]).collect();
            let mut lambda = vec![0.0; nodes.len()];
            for g in &node_groups {
                let w = normalized(&g.iter().map(|&p| reach[p]).collect::<Vec<_>>());
                for (&p, w) in g.iter().zip(w) {
                    lambda[p] = w;
                }
            }
            views.push(View {
                utils: leaves.iter().map(|&z| game.nodes[z].utils_f.clone()).collect(),
                trans: leaves
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| chance_between(game, nodes[leaf_node[j]], z))
                    .collect(),
                cond: normalized(&reach),
                lambda,
                programs: nodes.iter().map(|&s| Program::new(game, s, &leaf_pos)).collect(),
            });
        }
        let mut ubar = vec![0.0f64; ref_nodes.len()];
        for (j, &p) in leaf_node.iter().enumerate() {
            let players = views[0].utils[j].len();
            let (mut top, mut spread) = (0.0f64, 0.0f64);
            for i in 0..players {
                let (lo, hi) = views
                    .iter()
                    .map(|v| v.utils[j][i])
                    .fold((f64::MAX, f64::MIN), |(lo, hi), u| (lo.min(u), hi.max(u)));
                top = top.max(hi);
                spread = spread.max(hi - lo);
            }
            ubar[p] = ubar[p].max(top + spread);
        }
        Ok(Slot {
            tables,
            views,
            ubar,
            leaf_groups,
            node_groups,
        })
    }

    /// The δ = 1 distance: a maximum of seminorms of the difference of the
    /// two candidates' aligned data, with every pair-dependent weight
    /// replaced by its maximum over the group.
    fn metric(&self, x: usize, y: usize) -> f64 {
        let (a, b) = (&self.views[x], &self.views[y]);
        let er: Vec<f64> = a
            .utils
            .iter()
            .zip(&b.utils)
            .map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
            .collect();
        let e0: Vec<f64> = a.trans.iter().zip(&b.trans).map(|(p, q)| (p - q).abs()).collect();
        let transition: Vec<f64> = self
            .leaf_groups
            .iter()
            .zip(&self.ubar)
            .map(|(groups, u)| u * groups.iter().map(|g| g.iter().map(|&j| e0[j]).sum::<f64>()).fold(0.0, f64::max))
            .collect();
        let mut buf = Vec::new();
        let mut inner = 0.0f64;
        for c in &self.views {
            for g in &self.node_groups {
                let sum: f64 = g
                    .iter()
                    .map(|&p| c.lambda[p] * (transition[p] + c.programs[p].eval(&er, &mut buf)))
                    .sum();
                inner = inner.max(sum);
            }
        }
        let distribution: f64 = a
            .cond
            .iter()
            .zip(&b.cond)
            .zip(&self.ubar)
            .map(|((p, q), u)| (p - q).abs() * u)
            .sum();
        2.0 * inner + distribution
    }

    fn bijection(&self, game: &GameTree, x: usize, y: usize) -> Result<LeafBijection, AbstractionError> {
        Ok(match_tables(game, &self.tables[x], &self.tables[y])?)
    }
}

/// The ψ bracket of ordered pair x → y at scaling δ.
fn bracket(game: &GameTree, chance: &[f64], phi: &LeafBijection, delta: &Rational) -> f64 {
    let leaves = compute_leaf_errors(game, phi, delta);
    psi_bracket(game, chance, &aggregate_errors(game, phi, delta, leaves, chance))
}

fn to_rational(v: f64) -> Rational {
    Ratio::<i64>::approximate_float(v)
        .map(|r| Rational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
        .unwrap_or_else(|| Rational::from_float(v).unwrap_or_else(Rational::zero))
}

/// δ minimizing max(bracket(x→y, δ), bracket(y→x, 1/δ)), searched over the
/// utility ratios of aligned leaves and refined by golden section.
fn optimize_delta(
    game: &GameTree,
    chance: &[f64],
    fwd: &LeafBijection,
    back: &LeafBijection,
) -> (Rational, f64) {
    let eval = |d: &Rational| {
        if d.is_zero() {
            return f64::INFINITY;
        }
        bracket(game, chance, fwd, d).max(bracket(game, chance, back, &d.recip()))
    };
    let mut kinks: Vec<Rational> = vec![Rational::from_integer(1.into())];
    for &(z, w) in &fwd.leaves {
        for (u, v) in game.nodes[z].utils.iter().zip(&game.nodes[w].utils) {
            if *u > Rational::zero() && *v > Rational::zero() {
                kinks.push(u / v);
            }
        }
    }
    kinks.sort();
    kinks.dedup();
    let values: Vec<f64> = kinks.iter().map(eval).collect();
    let best = (0..kinks.len()).fold(0, |b, i| if values[i] < values[b] - 1e-12 { i } else { b });
    let (mut delta, mut value) = (kinks[best].clone(), values[best]);
    let lo = if best > 0 { kinks[best - 1].to_f64().unwrap() } else { kinks[best].to_f64().unwrap() / 2.0 };
    let hi = kinks.get(best + 1).map_or(kinks[best].to_f64().unwrap() * 2.0, |k| k.to_f64().unwrap());
    let (mut a, mut b) = (lo, hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if eval(&to_rational(c)) <= eval(&to_rational(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    let refined = to_rational((a + b) / 2.0);
    let v = eval(&refined);
    if v < value - 1e-12 {
        delta = refined;
        value = v;
    }
    (delta, value)
}

/// Distances, costs and scalings of one group.
#[derive(Clone, Debug)]
pub struct GroupDistances {
    /// Symmetric candidate distance.
    pub dist: Vec<Vec<f64>>,
    /// `slot_cost[k][x][y]`: the ψ bracket of x's slot k against y's.
    pub slot_cost: Vec<Vec<Vec<f64>>>,
    /// `deltas[k][x][y]` used for the ordered pair.
    pub deltas: Vec<Vec<Vec<Rational>>>,
    /// Per candidate: cost as a function of its per-slot ψ values.
    pub trees: Vec<ObjectiveTree>,
    /// Nature reach of each candidate's head set.
    pub weights: Vec<f64>,
}

/// How a candidate's per-slot ψ values add up along its own subtree: summed
/// over each slot node reached, with players maximizing and chance weighting.
fn cost_tree(game: &GameTree, chance: &[f64], slots: &[usize]) -> ObjectiveTree {
    let slot_of: HashMap<usize, usize> = slots.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    fn go(game: &GameTree, n: usize, slot_of: &HashMap<usize, usize>) -> Option<ObjectiveTree> {
        let node = &game.nodes[n];
        match node.owner {
            Owner::Leaf => None,
            Owner::Chance => {
                let parts: Vec<(f64, ObjectiveTree)> = node
                    .children
                    .iter()
                    .zip(&node.probs_f)
                    .filter_map(|(&c, &p)| go(game, c, slot_of).map(|t| (p, t)))
                    .collect();
                (!parts.is_empty()).then_some(ObjectiveTree::Sum(parts))
            }
            Owner::Player(_) => {
                let mut parts: Vec<ObjectiveTree> = node.children.iter().filter_map(|&c| go(game, c, slot_of)).collect();
                let below = match parts.len() {
                    0 => None,
                    1 => parts.pop(),
                    _ => Some(ObjectiveTree::Max(parts)),
                };
                match (node.infoset.and_then(|i| slot_of.get(&i)), below) {
                    (Some(&k), Some(t)) => Some(ObjectiveTree::Sum(vec![(1.0, ObjectiveTree::Leaf(k)), (1.0, t)])),
                    (Some(&k), None) => Some(ObjectiveTree::Leaf(k)),
                    (None, t) => t,
                }
            }
        }
    }
    let heads = &game.infosets[slots[0]].nodes;
    let w = normalized(&heads.iter().map(|&s| chance[s]).collect::<Vec<_>>());
    ObjectiveTree::Sum(
        heads
            .iter()
            .zip(w)
            .map(|(&s, w)| (w, go(game, s, &slot_of).expect("head is a slot")))
            .collect(),
    )
}

/// Fills every distance and cost of a group. Leaves are aligned through
/// `map`, which must merge the group's slots (and whatever the keys need).
pub fn group_distances(
    game: &GameTree,
    map: &AbstractionMap,
    group: &SlapGroup,
    mode: DeltaMode,
) -> Result<GroupDistances, AbstractionError> {
    let n = group.len();
    let chance = game.chance_reach_all();
    let slots = (0..group.num_slots())
        .map(|k| {
            let sets: Vec<usize> = group.candidates.iter().map(|c| c[k]).collect();
            Slot::new(game, map, &chance, &sets)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let one = Rational::from_integer(1.into());
    let mut slot_dist = vec![vec![vec![0.0; n]; n]; slots.len()];
    let mut slot_cost = vec![vec![vec![0.0; n]; n]; slots.len()];
    let mut deltas = vec![vec![vec![one.clone(); n]; n]; slots.len()];
    for (k, slot) in slots.iter().enumerate() {
        for x in 0..n {
            for y in x + 1..n {
                let fwd = slot.bijection(game, x, y)?;
                let back = slot.bijection(game, y, x)?;
                let (d, value) = match mode {
                    DeltaMode::Fixed => (one.clone(), slot.metric(x, y)),
                    DeltaMode::Optimized => optimize_delta(game, &chance, &fwd, &back),
                };
                slot_dist[k][x][y] = value;
                slot_dist[k][y][x] = value;
                slot_cost[k][x][y] = bracket(game, &chance, &fwd, &d);
                slot_cost[k][y][x] = bracket(game, &chance, &back, &d.recip());
                deltas[k][y][x] = d.recip();
                deltas[k][x][y] = d;
            }
        }
    }
    let trees: Vec<ObjectiveTree> = group.candidates.iter().map(|c| cost_tree(game, &chance, c)).collect();
    let mut dist = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let v: Vec<f64> = slot_dist.iter().map(|m| m[x][y]).collect();
            let d = trees.iter().map(|t| t.eval(&v)).fold(0.0, f64::max);
            dist[x][y] = d;
            dist[y][x] = d;
        }
    }
    let weights = group
        .heads()
        .map(|h| game.infosets[h].nodes.iter().map(|&s| chance[s]).sum())
        .collect();
    Ok(GroupDistances {
        dist,
        slot_cost,
        deltas,
        trees,
        weights,
    })
}
