use std::cmp::Ordering;
use std::collections::HashMap;

use super::{AbstractionMap, CrswfError};
use crate::efg::{GameTree, Owner};

/// Sequence step under the abstraction: (abstract set, action index).
type Step = (usize, usize);

/// What a leaf must agree on with its image: other players' sequence from
/// the root, the owner's own steps from the information set down, and the
/// chance labels below the information set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafKey {
    pub others: Vec<Step>,
    pub own: Vec<Step>,
    pub nature: Vec<String>,
}

#[derive(Clone, Debug)]
struct LeafEntry {
    key: LeafKey,
    /// Chance labels from the root, used to order leaves sharing a key.
    tiebreak: Vec<String>,
    leaf: usize,
    /// z[I]
    head: usize,
}

/// The leaves below one information set, sorted by key.
#[derive(Clone, Debug)]
pub struct LeafTable {
    pub infoset: usize,
    entries: Vec<LeafEntry>,
}

impl LeafTable {
    pub fn new(game: &GameTree, class_of: &[usize], infoset: usize) -> Self {
        let player = game.infosets[infoset].player;
        let mut entries = Vec::new();
        for &s in &game.infosets[infoset].nodes {
            let above = game.path_between(game.root, s);
            let mut others = Vec::new();
            let mut tiebreak = Vec::new();
            for &(n, a) in &above {
                let node = &game.nodes[n];
                if node.dummy {
                    continue;
                }
                match node.owner {
                    Owner::Player(p) if p != player => others.push((class_of[node.infoset.unwrap()], a)),
                    Owner::Chance => tiebreak.push(node.actions[a].clone()),
                    _ => {}
                }
            }
            for z in game.leaves_below(s) {
                let mut key = LeafKey {
                    others: others.clone(),
                    own: Vec::new(),
                    nature: Vec::new(),
                };
                let mut tb = tiebreak.clone();
                for (n, a) in game.path_between(s, z) {
                    let node = &game.nodes[n];
                    if node.dummy {
                        continue;
                    }
                    let step = || (class_of[node.infoset.unwrap()], a);
                    match node.owner {
                        Owner::Player(p) if p == player => key.own.push(step()),
                        Owner::Player(_) => key.others.push(step()),
                        Owner::Chance => {
                            key.nature.push(node.actions[a].clone());
                            tb.push(node.actions[a].clone());
                        }
                        Owner::Leaf => {}
                    }
                }
                entries.push(LeafEntry {
                    key,
                    tiebreak: tb,
                    leaf: z,
                    head: s,
                });
            }
        }
        entries.sort_by(|x, y| x.key.cmp(&y.key).then_with(|| x.tiebreak.cmp(&y.tiebreak)));
        LeafTable { infoset, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// φ between the leaves of two information sets, with the node mapping it
/// induces.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafBijection {
    pub from: usize,
    pub to: usize,
    /// (z, φ(z)) in key order.
    pub leaves: Vec<(usize, usize)>,
    /// (s, φ(s)) in the order of the source information set's nodes.
    pub nodes: Vec<(usize, usize)>,
}

impl LeafBijection {
    pub fn identity(game: &GameTree, infoset: usize) -> Self {
        let nodes: Vec<(usize, usize)> = game.infosets[infoset].nodes.iter().map(|&s| (s, s)).collect();
        let leaves = nodes
            .iter()
            .flat_map(|&(s, _)| game.leaves_below(s))
            .map(|z| (z, z))
            .collect();
        LeafBijection {
            from: infoset,
            to: infoset,
            leaves,
            nodes,
        }
    }

    pub fn inverse(&self) -> Self {
        let mut leaves: Vec<(usize, usize)> = self.leaves.iter().map(|&(a, b)| (b, a)).collect();
        leaves.sort_unstable();
        let mut nodes: Vec<(usize, usize)> = self.nodes.iter().map(|&(a, b)| (b, a)).collect();
        nodes.sort_unstable();
        LeafBijection {
            from: self.to,
            to: self.from,
            leaves,
            nodes,
        }
    }
}

/// Structural preconditions for pairing two information sets.
pub(crate) fn check_pair(game: &GameTree, a: usize, b: usize) -> Result<(), CrswfError> {
    let (x, y) = (&game.infosets[a], &game.infosets[b]);
    if x.player != y.player || x.actions != y.actions {
        return Err(CrswfError::NotMergeable {
            first: x.id.clone(),
            second: y.id.clone(),
        });
    }
    Ok(())
}

/// Pairs the leaves of two tables key by key.
pub fn match_tables(game: &GameTree, a: &LeafTable, b: &LeafTable) -> Result<LeafBijection, CrswfError> {
    check_pair(game, a.infoset, b.infoset)?;
    let ids = || (game.infosets[a.infoset].id.clone(), game.infosets[b.infoset].id.clone());
    if a.len() != b.len() {
        let (first, second) = ids();
        return Err(CrswfError::LeafCount {
            first,
            second,
            counts: (a.len(), b.len()),
        });
    }
    let mut leaves = Vec::with_capacity(a.len());
    let mut node_map: HashMap<usize, usize> = HashMap::new();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        if x.key != y.key {
            let (first, second) = ids();
            let condition = if x.key.others != y.key.others { 1 } else { 2 };
            // Report the leaf whose key sorts first among the two unmatched.
            let leaf = match x.key.cmp(&y.key) {
                Ordering::Greater => &game.nodes[y.leaf].id,
                _ => &game.nodes[x.leaf].id,
            };
            return Err(CrswfError::Condition {
                condition,
                first,
                second,
                leaf: leaf.clone(),
            });
        }
        leaves.push((x.leaf, y.leaf));
        match node_map.insert(x.head, y.head) {
            Some(prev) if prev != y.head => {
                let (first, second) = ids();
                return Err(CrswfError::NodeMapping {
                    first,
                    second,
                    node: game.nodes[x.head].id.clone(),
                });
            }
            _ => {}
        }
    }
    let nodes: Vec<(usize, usize)> = game.infosets[a.infoset]
        .nodes
        .iter()
        .map(|s| (*s, node_map[s]))
        .collect();
    let mut images: Vec<usize> = nodes.iter().map(|n| n.1).collect();
    images.sort_unstable();
    images.dedup();
    if images.len() != game.infosets[b.infoset].nodes.len() {
        let (first, second) = ids();
        return Err(CrswfError::NodeMapping {
            first,
            second,
            node: game.nodes[nodes[0].0].id.clone(),
        });
    }
    Ok(LeafBijection {
        from: a.infoset,
        to: b.infoset,
        leaves,
        nodes,
    })
}

/// φ: Z_I → Z_Ĭ pairing leaves with equal keys under the abstraction.
pub fn find_leaf_bijection(
    game: &GameTree,
    map: &AbstractionMap,
    from: usize,
    to: usize,
) -> Result<LeafBijection, CrswfError> {
    if from == to {
        return Ok(LeafBijection::identity(game, from));
    }
    check_pair(game, from, to)?;
    let a = LeafTable::new(game, map.class_assignment(), from);
    let b = LeafTable::new(game, map.class_assignment(), to);
    match_tables(game, &a, &b)
}
