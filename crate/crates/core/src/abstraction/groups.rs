//! Candidate information sets of one level and their mergeable groups.

use std::collections::{BTreeMap, HashMap};

use crate::crswf::AbstractionMap;
use crate::efg::{GameTree, Owner};

/// Candidates at one level that share their structure. Each candidate is a
/// head set followed by its own later sets, aligned slot by slot across the
/// group: merging candidates merges them slot-wise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlapGroup {
    pub player: usize,
    pub level: usize,
    /// `candidates[m][k]` is slot k of candidate m; slot 0 is the head.
    pub candidates: Vec<Vec<usize>>,
}

impl SlapGroup {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn num_slots(&self) -> usize {
        self.candidates.first().map_or(0, Vec::len)
    }

    pub fn heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().map(|c| c[0])
    }
}

/// Is `set` the owner's first decision after exactly `level` chance events?
pub fn is_head(game: &GameTree, set: usize, level: usize) -> bool {
    let info = &game.infosets[set];
    let s = info.nodes[0];
    if game.nodes[s].dummy {
        return false;
    }
    let (mut events, mut acted) = (0, false);
    let mut cur = game.nodes[s].parent;
    while let Some(n) = cur {
        let node = &game.nodes[n];
        if !node.dummy {
            match node.owner {
                Owner::Chance => events += 1,
                Owner::Player(p) if p == info.player && events == 0 => acted = true,
                _ => {}
            }
        }
        cur = node.parent;
    }
    events == level && !acted
}

/// Leaf description that ignores set identities: own action labels above
/// the head, other players' steps as (player, action label), own action
/// labels and chance labels below the head.
type CoarseKey = (Vec<String>, Vec<(usize, String)>, Vec<String>, Vec<String>);

struct Entry {
    key: CoarseKey,
    tiebreak: Vec<String>,
    own_sets: Vec<usize>,
}

fn entries(game: &GameTree, head: usize) -> Vec<Entry> {
    let player = game.infosets[head].player;
    let mut out = Vec::new();
    for &s in &game.infosets[head].nodes {
        let mut others = Vec::new();
        let mut above = Vec::new();
        let mut tiebreak = Vec::new();
        for (n, a) in game.path_between(game.root, s) {
            let node = &game.nodes[n];
            match node.owner {
                _ if node.dummy => {}
                Owner::Player(p) if p != player => others.push((p, node.actions[a].clone())),
                Owner::Player(_) => above.push(node.actions[a].clone()),
                Owner::Chance => tiebreak.push(node.actions[a].clone()),
                Owner::Leaf => {}
            }
        }
        for z in game.leaves_below(s) {
            let mut e = Entry {
                key: (above.clone(), others.clone(), Vec::new(), Vec::new()),
                tiebreak: tiebreak.clone(),
                own_sets: Vec::new(),
            };
            for (n, a) in game.path_between(s, z) {
                let node = &game.nodes[n];
                let label = node.actions[a].clone();
                match node.owner {
                    _ if node.dummy => {}
                    Owner::Player(p) if p == player => {
                        e.key.2.push(label);
                        e.own_sets.push(node.infoset.unwrap());
                    }
                    Owner::Player(p) => e.key.1.push((p, label)),
                    Owner::Chance => {
                        e.key.3.push(label.clone());
                        e.tiebreak.push(label);
                    }
                    Owner::Leaf => {}
                }
            }
            out.push(e);
        }
    }
    out.sort_by(|x, y| x.key.cmp(&y.key).then_with(|| x.tiebreak.cmp(&y.tiebreak)));
    out
}

/// Own sets of a candidate in order of first appearance.
fn slot_order(es: &[Entry]) -> Vec<usize> {
    let mut seen = Vec::new();
    for e in es {
        for &i in &e.own_sets {
            if !seen.contains(&i) {
                seen.push(i);
            }
        }
    }
    seen
}

/// The slots of `x` aligned to the reference slots, if the own-set
/// correspondence along paired leaves is one-to-one.
fn align(reference: &[Entry], ref_slots: &[usize], x: &[Entry]) -> Option<Vec<usize>> {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    for (r, e) in reference.iter().zip(x) {
        if r.own_sets.len() != e.own_sets.len() {
            return None;
        }
        for (&a, &b) in r.own_sets.iter().zip(&e.own_sets) {
            if *fwd.entry(a).or_insert(b) != b || *back.entry(b).or_insert(a) != a {
                return None;
            }
        }
    }
    ref_slots.iter().map(|s| fwd.get(s).copied()).collect()
}

/// All groups of two or more structurally identical candidates at `level`.
pub fn find_groups(game: &GameTree, level: usize) -> Vec<SlapGroup> {
    let mut buckets: BTreeMap<(usize, Vec<String>, Vec<CoarseKey>), Vec<(usize, Vec<Entry>)>> = BTreeMap::new();
    for set in (0..game.infosets.len()).filter(|&i| is_head(game, i, level)) {
        let es = entries(game, set);
        let info = &game.infosets[set];
        let sig = es.iter().map(|e| e.key.clone()).collect();
        buckets
            .entry((info.player, info.actions.clone(), sig))
            .or_default()
            .push((set, es));
    }
    let mut groups = Vec::new();
    for ((player, _, _), mut rest) in buckets {
        while !rest.is_empty() {
            let (_, ref_entries) = rest.remove(0);
            let ref_slots = slot_order(&ref_entries);
            let mut candidates = vec![ref_slots.clone()];
            let mut left = Vec::new();
            for (set, es) in rest.drain(..) {
                match align(&ref_entries, &ref_slots, &es) {
                    Some(slots) => candidates.push(slots),
                    None => left.push((set, es)),
                }
            }
            if candidates.len() > 1 {
                groups.push(SlapGroup {
                    player,
                    level,
                    candidates,
                });
            }
            rest = left;
        }
    }
    groups.sort_by_key(|g| g.candidates[0][0]);
    groups
}

/// Map merging every group slot-wise into one class per slot, on top of `base`.
pub fn merge_groups(
    game: &GameTree,
    base: &AbstractionMap,
    groups: &[(&SlapGroup, &[Vec<usize>])],
) -> AbstractionMap {
    let mut assignment: Vec<usize> = base.class_assignment().to_vec();
    let mut next = base.num_classes();
    for (group, clusters) in groups {
        for cluster in clusters.iter() {
            for k in 0..group.num_slots() {
                for &m in cluster {
                    assignment[group.candidates[m][k]] = next;
                }
                next += 1;
            }
        }
    }
    AbstractionMap::from_assignment(game, &assignment)
}
