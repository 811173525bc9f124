use std::collections::HashMap;

use num::{BigRational, One, Signed, ToPrimitive, Zero};

use super::GameError;

pub type Rational = BigRational;

/// Who moves at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Player(usize),
    Chance,
    Leaf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub owner: Owner,
    /// Index into [`GameTree::infosets`] for player nodes.
    pub infoset: Option<usize>,
    /// The `infoset=` label from the source document (chance nodes keep theirs verbatim).
    pub infoset_label: String,
    pub parent: Option<usize>,
    pub actions: Vec<String>,
    pub children: Vec<usize>,
    /// Chance probabilities, aligned with `children`.
    pub probs: Vec<Rational>,
    pub probs_f: Vec<f64>,
    /// Leaf utilities after the non-negativity shift.
    pub utils: Vec<Rational>,
    pub utils_f: Vec<f64>,
    pub depth: usize,
    /// Inserted during normalization (root wrapper or depth padding).
    pub dummy: bool,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.owner == Owner::Leaf
    }

    pub fn is_chance(&self) -> bool {
        self.owner == Owner::Chance
    }

    pub fn player(&self) -> Option<usize> {
        match self.owner {
            Owner::Player(p) => Some(p),
            _ => None,
        }
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Infoset {
    pub id: String,
    pub player: usize,
    pub nodes: Vec<usize>,
    pub actions: Vec<String>,
}

/// An extensive-form game with exact rational chance probabilities and utilities.
///
/// Nodes are stored in depth-first preorder, so every child has a larger
/// index than its parent. The tree is immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    pub name: String,
    pub num_players: usize,
    pub nodes: Vec<Node>,
    pub infosets: Vec<Infoset>,
    pub root: usize,
    /// Constant added to each player's utilities so that all are non-negative.
    pub shift: Vec<Rational>,
    infoset_index: HashMap<String, usize>,
}

pub const START_ACTION: &str = "start";
const START_ID: &str = "__start";
const PAD_LABEL: &str = "~";

impl GameTree {
    pub fn node(&self, s: usize) -> &Node {
        &self.nodes[s]
    }

    pub fn infoset(&self, id: usize) -> &Infoset {
        &self.infosets[id]
    }

    pub fn infoset_by_id(&self, id: &str) -> Option<usize> {
        self.infoset_index.get(id).copied()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&s| self.nodes[s].is_leaf())
    }

    pub fn player_infosets(&self, player: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.infosets.len()).filter(move |&i| self.infosets[i].player == player)
    }

    /// Largest utility of any player at any leaf (shifted units).
    pub fn max_utility(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .flat_map(|n| n.utils_f.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Leaves below `s`, in preorder.
    pub fn leaves_below(&self, s: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![s];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.is_leaf() {
                out.push(n);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    /// One past the last preorder index of the subtree rooted at `s`.
    pub fn subtree_end(&self, mut s: usize) -> usize {
        while let Some(&last) = self.nodes[s].children.last() {
            s = last;
        }
        s + 1
    }

    /// π₀ of every node, in floating point.
    pub fn chance_reach_all(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        out[self.root] = 1.0;
        for s in 0..self.nodes.len() {
            let node = &self.nodes[s];
            for (a, &c) in node.children.iter().enumerate() {
                out[c] = out[s] * if node.is_chance() { node.probs_f[a] } else { 1.0 };
            }
        }
        out
    }

    /// Is `anc` an ancestor of (or equal to) `s`?
    pub fn is_ancestor(&self, anc: usize, mut s: usize) -> bool {
        loop {
            if s == anc {
                return true;
            }
            match self.nodes[s].parent {
                Some(p) if p >= anc => s = p,
                _ => return false,
            }
        }
    }

    /// Edges from `from` (exclusive) down to `to`: (node, action index) pairs in root-to-leaf order.
    pub fn path_between(&self, from: usize, to: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut s = to;
        while s != from {
            let p = self.nodes[s]
                .parent
                .expect("path_between: `from` is not an ancestor of `to`");
            let a = self.nodes[p].children.iter().position(|&c| c == s).unwrap();
            out.push((p, a));
            s = p;
        }
        out.reverse();
        out
    }

    /// The ancestor of `z` (or `z` itself) that belongs to information set `infoset`.
    pub fn predecessor_in(&self, infoset: usize, z: usize) -> Option<usize> {
        let mut s = Some(z);
        while let Some(n) = s {
            if self.nodes[n].infoset == Some(infoset) {
                return Some(n);
            }
            s = self.nodes[n].parent;
        }
        None
    }

    /// Chance-only probability of the path from `from` down to `to`.
    pub fn chance_prob_between(&self, from: usize, to: usize) -> Rational {
        let mut p = Rational::one();
        for (n, a) in self.path_between(from, to) {
            if self.nodes[n].is_chance() {
                p *= &self.nodes[n].probs[a];
            }
        }
        p
    }

    pub fn chance_reach(&self, s: usize) -> Rational {
        self.chance_prob_between(self.root, s)
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.infoset_index = self
            .infosets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
    }
}

/// Raw node description used while a game is being assembled.
#[derive(Clone, Debug)]
struct RawNode {
    id: String,
    owner: Owner,
    infoset: String,
    edges: Vec<(String, usize, Option<Rational>)>,
    utils: Vec<Rational>,
    line: usize,
    has_parent: bool,
}

/// Incremental constructor for [`GameTree`], shared by the file parser and the generators.
#[derive(Debug, Default)]
pub struct GameBuilder {
    name: String,
    num_players: usize,
    raw: Vec<RawNode>,
    by_id: HashMap<String, usize>,
    pending_edges: Vec<(String, String, String, Option<Rational>, usize)>,
}

impl GameBuilder {
    pub fn new(name: impl Into<String>, num_players: usize) -> Self {
        GameBuilder {
            name: name.into(),
            num_players,
            ..Default::default()
        }
    }

    fn insert(&mut self, raw: RawNode) -> Result<usize, GameError> {
        if self.by_id.contains_key(&raw.id) {
            return Err(GameError::DuplicateNode {
                line: raw.line,
                id: raw.id,
            });
        }
        let idx = self.raw.len();
        self.by_id.insert(raw.id.clone(), idx);
        self.raw.push(raw);
        Ok(idx)
    }

    pub fn decision(&mut self, id: &str, player: usize, infoset: &str) -> Result<(), GameError> {
        self.decision_at(id, player, infoset, 0)
    }

    pub(crate) fn decision_at(
        &mut self,
        id: &str,
        player: usize,
        infoset: &str,
        line: usize,
    ) -> Result<(), GameError> {
        if player >= self.num_players {
            return Err(GameError::Syntax {
                line,
                msg: format!("player index {} out of range", player + 1),
            });
        }
        self.insert(RawNode {
            id: id.to_string(),
            owner: Owner::Player(player),
            infoset: infoset.to_string(),
            edges: Vec::new(),
            utils: Vec::new(),
            line,
            has_parent: false,
        })
        .map(|_| ())
    }

    pub fn chance(&mut self, id: &str, infoset: &str) -> Result<(), GameError> {
        self.chance_at(id, infoset, 0)
    }

    pub(crate) fn chance_at(&mut self, id: &str, infoset: &str, line: usize) -> Result<(), GameError> {
        self.insert(RawNode {
            id: id.to_string(),
            owner: Owner::Chance,
            infoset: infoset.to_string(),
            edges: Vec::new(),
            utils: Vec::new(),
            line,
            has_parent: false,
        })
        .map(|_| ())
    }

    pub fn leaf(&mut self, id: &str, utils: Vec<Rational>) -> Result<(), GameError> {
        self.leaf_at(id, utils, 0)
    }

    pub(crate) fn leaf_at(&mut self, id: &str, utils: Vec<Rational>, line: usize) -> Result<(), GameError> {
        if utils.len() != self.num_players {
            return Err(GameError::Syntax {
                line,
                msg: format!(
                    "leaf {id} has {} utilities, expected {}",
                    utils.len(),
                    self.num_players
                ),
            });
        }
        self.insert(RawNode {
            id: id.to_string(),
            owner: Owner::Leaf,
            infoset: String::new(),
            edges: Vec::new(),
            utils,
            line,
            has_parent: false,
        })
        .map(|_| ())
    }

    /// Edges may reference nodes declared later; they are resolved in [`GameBuilder::build`].
    pub fn edge(&mut self, parent: &str, label: &str, child: &str, prob: Option<Rational>) {
        self.edge_at(parent, label, child, prob, 0)
    }

    pub(crate) fn edge_at(
        &mut self,
        parent: &str,
        label: &str,
        child: &str,
        prob: Option<Rational>,
        line: usize,
    ) {
        self.pending_edges.push((
            parent.to_string(),
            label.to_string(),
            child.to_string(),
            prob,
            line,
        ));
    }

    pub fn build(mut self) -> Result<GameTree, GameError> {
        for (parent, label, child, prob, line) in std::mem::take(&mut self.pending_edges) {
            let p = *self.by_id.get(&parent).ok_or(GameError::DanglingNode {
                line,
                id: parent.clone(),
            })?;
            let c = *self.by_id.get(&child).ok_or(GameError::DanglingNode {
                line,
                id: child.clone(),
            })?;
            if self.raw[c].has_parent {
                return Err(GameError::NotATree(format!("node {child} has two parents")));
            }
            match (self.raw[p].owner, &prob) {
                (Owner::Leaf, _) => {
                    return Err(GameError::Syntax {
                        line,
                        msg: format!("leaf {parent} cannot have children"),
                    })
                }
                (Owner::Chance, None) => {
                    return Err(GameError::Syntax {
                        line,
                        msg: format!("edge from chance node {parent} needs prob="),
                    })
                }
                (Owner::Player(_), Some(_)) => {
                    return Err(GameError::Syntax {
                        line,
                        msg: format!("edge from decision node {parent} must not carry prob="),
                    })
                }
                _ => {}
            }
            if self.raw[p].edges.iter().any(|(l, _, _)| *l == label) {
                return Err(GameError::Syntax {
                    line,
                    msg: format!("duplicate action {label} at node {parent}"),
                });
            }
            self.raw[c].has_parent = true;
            self.raw[p].edges.push((label, c, prob));
        }

        let roots: Vec<usize> = (0..self.raw.len()).filter(|&i| !self.raw[i].has_parent).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(GameError::NotATree("no root (cycle or empty game)".into())),
            _ => {
                return Err(GameError::NotATree(format!(
                    "multiple roots: {}",
                    roots
                        .iter()
                        .map(|&r| self.raw[r].id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )))
            }
        };
        if self.raw[root].owner == Owner::Leaf {
            return Err(GameError::LeafRoot);
        }
        for r in &self.raw {
            if r.owner != Owner::Leaf && r.edges.is_empty() {
                return Err(GameError::NoActions(r.id.clone()));
            }
            if r.owner == Owner::Chance {
                let total: Rational = r.edges.iter().map(|(_, _, p)| p.clone().unwrap()).sum();
                if r.edges.iter().any(|(_, _, p)| p.as_ref().unwrap().is_negative()) || !total.is_one() {
                    return Err(GameError::ProbabilitySum {
                        id: r.id.clone(),
                        total: total.to_string(),
                    });
                }
            }
        }

        // Preorder renumbering (also detects unreachable cycles).
        let mut order = Vec::with_capacity(self.raw.len());
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            order.push(n);
            stack.extend(self.raw[n].edges.iter().rev().map(|(_, c, _)| *c));
        }
        if order.len() != self.raw.len() {
            return Err(GameError::NotATree("some nodes are not reachable from the root".into()));
        }
        let mut new_index = vec![0usize; self.raw.len()];
        for (i, &n) in order.iter().enumerate() {
            new_index[n] = i;
        }

        // Non-negativity shift per player.
        let mut shift = vec![Rational::zero(); self.num_players];
        for r in self.raw.iter().filter(|r| r.owner == Owner::Leaf) {
            for (p, u) in r.utils.iter().enumerate() {
                if -u > shift[p] {
                    shift[p] = -u;
                }
            }
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        for &n in &order {
            let r = &self.raw[n];
            let utils: Vec<Rational> = r.utils.iter().zip(&shift).map(|(u, s)| u + s).collect();
            nodes.push(Node {
                id: r.id.clone(),
                owner: r.owner,
                infoset: None,
                infoset_label: r.infoset.clone(),
                parent: None,
                actions: r.edges.iter().map(|(l, _, _)| l.clone()).collect(),
                children: r.edges.iter().map(|(_, c, _)| new_index[*c]).collect(),
                probs: r.edges.iter().filter_map(|(_, _, p)| p.clone()).collect(),
                probs_f: Vec::new(),
                utils_f: Vec::new(),
                utils,
                depth: 0,
                dummy: false,
            });
        }
        finish(self.name, self.num_players, nodes, shift)
    }
}

/// Wrap a chance root, pad leaves to uniform depth, index information sets and cache floats.
fn finish(
    name: String,
    num_players: usize,
    mut nodes: Vec<Node>,
    shift: Vec<Rational>,
) -> Result<GameTree, GameError> {
    if nodes[0].is_chance() {
        let old = std::mem::take(&mut nodes);
        nodes.push(Node {
            id: START_ID.into(),
            owner: Owner::Player(0),
            infoset: None,
            infoset_label: START_ID.into(),
            parent: None,
            actions: vec![START_ACTION.into()],
            children: vec![1],
            probs: Vec::new(),
            probs_f: Vec::new(),
            utils: Vec::new(),
            utils_f: Vec::new(),
            depth: 0,
            dummy: true,
        });
        for mut n in old {
            n.children.iter_mut().for_each(|c| *c += 1);
            nodes.push(n);
        }
    }

    // Depth of each node, then the deepest leaf.
    let mut depth = vec![0usize; nodes.len()];
    for s in 0..nodes.len() {
        for &c in &nodes[s].children {
            depth[c] = depth[s] + 1;
        }
    }
    let max_depth = (0..nodes.len())
        .filter(|&s| nodes[s].is_leaf())
        .map(|s| depth[s])
        .max()
        .unwrap_or(0);

    // Rebuild in preorder, inserting unary chance chains above shallow leaves.
    let mut out: Vec<Node> = Vec::with_capacity(nodes.len());
    emit(&nodes, 0, None, 0, max_depth, &mut out);

    // Information sets, in order of first appearance.
    let mut infosets: Vec<Infoset> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in 0..out.len() {
        let Owner::Player(p) = out[s].owner else { continue };
        let label = out[s].infoset_label.clone();
        let id = match index.get(&label) {
            Some(&i) => i,
            None => {
                index.insert(label.clone(), infosets.len());
                infosets.push(Infoset {
                    id: label.clone(),
                    player: p,
                    nodes: Vec::new(),
                    actions: out[s].actions.clone(),
                });
                infosets.len() - 1
            }
        };
        let set = &mut infosets[id];
        if set.player != p {
            return Err(GameError::MixedInfoset {
                infoset: label,
                node: out[s].id.clone(),
            });
        }
        if set.actions != out[s].actions {
            return Err(GameError::ActionMismatch {
                infoset: label,
                node: out[s].id.clone(),
            });
        }
        set.nodes.push(s);
        out[s].infoset = Some(id);
    }

    for n in &mut out {
        n.probs_f = n.probs.iter().map(|p| p.to_f64().unwrap()).collect();
        n.utils_f = n.utils.iter().map(|u| u.to_f64().unwrap()).collect();
    }

    let mut game = GameTree {
        name,
        num_players,
        nodes: out,
        infosets,
        root: 0,
        shift,
        infoset_index: HashMap::new(),
    };
    game.rebuild_index();
    Ok(game)
}

fn emit(
    nodes: &[Node],
    s: usize,
    parent: Option<usize>,
    depth: usize,
    max_depth: usize,
    out: &mut Vec<Node>,
) -> usize {
    let top = out.len();
    let mut parent = parent;
    let mut depth = depth;
    if nodes[s].is_leaf() {
        for k in 0..max_depth.saturating_sub(depth) {
            let idx = out.len();
            out.push(Node {
                id: format!("{}{PAD_LABEL}pad{k}", nodes[s].id),
                owner: Owner::Chance,
                infoset: None,
                infoset_label: PAD_LABEL.into(),
                parent,
                actions: vec![PAD_LABEL.into()],
                children: vec![idx + 1],
                probs: vec![Rational::one()],
                probs_f: Vec::new(),
                utils: Vec::new(),
                utils_f: Vec::new(),
                depth,
                dummy: true,
            });
            parent = Some(idx);
            depth += 1;
        }
    }
    let idx = out.len();
    let mut node = nodes[s].clone();
    node.parent = parent;
    node.depth = depth;
    let kids = std::mem::take(&mut node.children);
    out.push(node);
    for c in kids {
        let ci = emit(nodes, c, Some(idx), depth + 1, max_depth, out);
        out[idx].children.push(ci);
    }
    top
}

impl std::fmt::Display for Owner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Owner::Player(p) => write!(f, "p{}", p + 1),
            Owner::Chance => write!(f, "chance"),
            Owner::Leaf => write!(f, "leaf"),
        }
    }
}
