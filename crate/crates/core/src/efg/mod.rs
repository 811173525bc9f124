//! Extensive-form game model: tree, file format, strategies, reach
//! probabilities, values, best responses and regrets.

mod format;
mod tree;
mod values;

use thiserror::Error;

pub use format::{emit_game, parse_game, parse_rational};
pub use tree::{GameBuilder, GameTree, Infoset, Node, Owner, Rational, START_ACTION};
pub use values::{
    best_response, compute_reach, counterfactual_value, path_prob, immediate_regrets, imperfect_value,
    node_values, BestResponse, InfosetValue, ReachTable, RegretReport, SetRegret, StrategyError,
    StrategyProfile, ValueKind,
};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: reference to undeclared node {id}")]
    DanglingNode { line: usize, id: String },
    #[error("line {line}: node {id} declared twice")]
    DuplicateNode { line: usize, id: String },
    #[error("chance probabilities at node {id} sum to {total}, not 1")]
    ProbabilitySum { id: String, total: String },
    #[error("information set {infoset} mixes owners (node {node})")]
    MixedInfoset { infoset: String, node: String },
    #[error("information set {infoset}: node {node} has different action labels")]
    ActionMismatch { infoset: String, node: String },
    #[error("root must be a decision node")]
    LeafRoot,
    #[error("internal node {0} has no actions")]
    NoActions(String),
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("game has no perfect recall for player {}", .0 + 1)]
    ImperfectRecall(usize),
}

/// Which movers are kept when extracting an action sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqFilter {
    All,
    Only(usize),
    Excluding(usize),
    ExcludingPlayerAndChance(usize),
    ExcludingChance,
}

impl SeqFilter {
    fn keeps(self, owner: Owner) -> bool {
        match (self, owner) {
            (_, Owner::Leaf) => false,
            (SeqFilter::All, _) => true,
            (SeqFilter::Only(i), Owner::Player(p)) => p == i,
            (SeqFilter::Only(_), Owner::Chance) => false,
            (SeqFilter::Excluding(i), Owner::Player(p)) => p != i,
            (SeqFilter::Excluding(_), Owner::Chance) => true,
            (SeqFilter::ExcludingPlayerAndChance(i), Owner::Player(p)) => p != i,
            (SeqFilter::ExcludingPlayerAndChance(_), Owner::Chance) => false,
            (SeqFilter::ExcludingChance, Owner::Player(_)) => true,
            (SeqFilter::ExcludingChance, Owner::Chance) => false,
        }
    }
}

/// One (information set, action) step of a sequence. Chance steps are
/// identified by their action label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeqStep {
    Decision { infoset: usize, action: usize },
    Chance { label: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceSignature(pub Vec<SeqStep>);

impl SequenceSignature {
    /// Rewrite decision steps through a partition of information sets.
    pub fn mapped(&self, class_of: &[usize]) -> SequenceSignature {
        SequenceSignature(
            self.0
                .iter()
                .map(|st| match st {
                    SeqStep::Decision { infoset, action } => SeqStep::Decision {
                        infoset: class_of[*infoset],
                        action: *action,
                    },
                    c => c.clone(),
                })
                .collect(),
        )
    }
}

impl GameTree {
    /// Steps taken strictly between `from` (included as the first mover) and `to`.
    ///
    /// Normalization dummies are skipped.
    pub fn sequence_between(&self, from: usize, to: usize, filter: SeqFilter) -> SequenceSignature {
        SequenceSignature(
            self.path_between(from, to)
                .into_iter()
                .filter(|&(n, _)| !self.nodes[n].dummy && filter.keeps(self.nodes[n].owner))
                .map(|(n, a)| match self.nodes[n].owner {
                    Owner::Player(_) => SeqStep::Decision {
                        infoset: self.nodes[n].infoset.unwrap(),
                        action: a,
                    },
                    _ => SeqStep::Chance {
                        label: self.nodes[n].actions[a].clone(),
                    },
                })
                .collect(),
        )
    }

    /// X(s) restricted by `filter`.
    pub fn sequence(&self, s: usize, filter: SeqFilter) -> SequenceSignature {
        self.sequence_between(self.root, s, filter)
    }

    /// Finds a violation of perfect recall when information sets are
    /// grouped by `class_of` (identity grouping checks the game itself).
    pub fn recall_violation_with(&self, class_of: &[usize]) -> Option<RecallViolation> {
        let mut first: std::collections::HashMap<usize, (usize, SequenceSignature)> =
            Default::default();
        for s in 0..self.nodes.len() {
            let (Some(set), Owner::Player(p)) = (self.nodes[s].infoset, self.nodes[s].owner) else {
                continue;
            };
            let class = class_of[set];
            let sig = self.sequence(s, SeqFilter::Only(p)).mapped(class_of);
            match first.get(&class) {
                None => {
                    first.insert(class, (s, sig));
                }
                Some((s1, sig1)) if *sig1 != sig => {
                    return Some(RecallViolation {
                        class,
                        first: *s1,
                        second: s,
                    })
                }
                _ => {}
            }
        }
        None
    }

    pub fn recall_violation(&self) -> Option<RecallViolation> {
        let identity: Vec<usize> = (0..self.infosets.len()).collect();
        self.recall_violation_with(&identity)
    }

    pub fn is_perfect_recall(&self) -> bool {
        self.recall_violation().is_none()
    }

    /// Perfect recall for a single player only.
    pub fn has_perfect_recall_for(&self, player: usize) -> bool {
        self.infosets.iter().filter(|i| i.player == player).all(|set| {
            let mut sigs = set.nodes.iter().map(|&s| self.sequence(s, SeqFilter::Only(player)));
            let first = sigs.next();
            sigs.all(|s| Some(s) == first)
        })
    }
}

/// Two nodes of one information set (or abstract class) whose owner's own
/// action histories differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecallViolation {
    pub class: usize,
    pub first: usize,
    pub second: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LEVEL: &str = "\
game t players=2
node r owner=p1 infoset=R
node x owner=p2 infoset=X
node y owner=p2 infoset=X
edge r L x
edge r R y
node c owner=chance infoset=c0
edge x l c
leaf a utils=1,0
leaf b utils=0,1
edge c h a prob=1/2
edge c t b prob=1/2
leaf d utils=2,-2
leaf e utils=0,0
leaf f utils=3,3
edge x r d
edge y l e
edge y r f
";

    #[test]
    fn sequences_respect_filters() {
        let g = parse_game(TWO_LEVEL).unwrap();
        let a = g.nodes.iter().position(|n| n.id == "a").unwrap();
        assert_eq!(g.sequence(a, SeqFilter::All).0.len(), 3);
        assert_eq!(g.sequence(a, SeqFilter::Only(0)).0.len(), 1);
        assert_eq!(g.sequence(a, SeqFilter::ExcludingPlayerAndChance(0)).0.len(), 1);
        assert_eq!(g.sequence(a, SeqFilter::ExcludingChance).0.len(), 2);
        assert_eq!(g.sequence(g.root, SeqFilter::All).0.len(), 0);
    }

    #[test]
    fn hidden_own_action_breaks_recall() {
        // Player 2 does not observe player 1's move: still perfect recall.
        let g = parse_game(TWO_LEVEL).unwrap();
        assert!(g.is_perfect_recall());

        // Player 1 forgetting their own move is not.
        let forgetful = "\
game f players=1
node r owner=p1 infoset=R
node x owner=p1 infoset=X
node y owner=p1 infoset=X
edge r L x
edge r R y
leaf a utils=1
leaf b utils=0
leaf c utils=0
leaf d utils=1
edge x l a
edge x r b
edge y l c
edge y r d
";
        let g = parse_game(forgetful).unwrap();
        let v = g.recall_violation().unwrap();
        assert_eq!(g.infosets[v.class].id, "X");
        assert!(!g.has_perfect_recall_for(0));
    }

    #[test]
    fn single_decision_game_has_perfect_recall() {
        let g = parse_game("game s players=1\nnode r owner=p1 infoset=R\nleaf a utils=1\nedge r go a\n").unwrap();
        assert!(g.is_perfect_recall());
    }
}
