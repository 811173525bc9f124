use thiserror::Error;

use super::tree::{GameTree, Owner};
use super::GameError;

const DIST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("strategy covers {found} information sets, game has {expected}")]
    Coverage { expected: usize, found: usize },
    #[error("information set {infoset}: {found} probabilities for {expected} actions")]
    Arity {
        infoset: String,
        expected: usize,
        found: usize,
    },
    #[error("information set {infoset}: not a distribution (sum {sum})")]
    NotADistribution { infoset: String, sum: f64 },
    #[error("no strategy entry for information set {0}")]
    Missing(String),
}

/// Behavioral strategies for every player information set, indexed like
/// [`GameTree::infosets`] (or like abstract classes, for abstract profiles).
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile {
    pub dists: Vec<Vec<f64>>,
}

impl StrategyProfile {
    pub fn uniform(game: &GameTree) -> Self {
        StrategyProfile {
            dists: game
                .infosets
                .iter()
                .map(|s| vec![1.0 / s.actions.len() as f64; s.actions.len()])
                .collect(),
        }
    }

    pub fn prob(&self, infoset: usize, action: usize) -> f64 {
        self.dists[infoset][action]
    }

    pub fn validate(&self, game: &GameTree) -> Result<(), StrategyError> {
        if self.dists.len() != game.infosets.len() {
            return Err(StrategyError::Coverage {
                expected: game.infosets.len(),
                found: self.dists.len(),
            });
        }
        for (set, d) in game.infosets.iter().zip(&self.dists) {
            if d.len() != set.actions.len() {
                return Err(StrategyError::Arity {
                    infoset: set.id.clone(),
                    expected: set.actions.len(),
                    found: d.len(),
                });
            }
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > DIST_TOLERANCE || d.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(StrategyError::NotADistribution {
                    infoset: set.id.clone(),
                    sum,
                });
            }
        }
        Ok(())
    }

    /// Probability of taking action `a` at node `s` (chance or player).
    pub fn edge_prob(&self, game: &GameTree, s: usize, a: usize) -> f64 {
        let node = &game.nodes[s];
        match node.owner {
            Owner::Chance => node.probs_f[a],
            Owner::Player(_) => self.dists[node.infoset.unwrap()][a],
            Owner::Leaf => unreachable!("leaves have no actions"),
        }
    }
}

/// Reach probabilities of every node under a profile.
#[derive(Clone, Debug)]
pub struct ReachTable {
    /// π^σ(s)
    pub reach: Vec<f64>,
    /// π₀(s)
    pub chance: Vec<f64>,
    /// π_i(s), per player.
    pub own: Vec<Vec<f64>>,
    /// π_{-i}(s), per player (chance included).
    pub others: Vec<Vec<f64>>,
}

impl ReachTable {
    pub fn infoset_reach(&self, game: &GameTree, set: usize) -> f64 {
        game.infosets[set].nodes.iter().map(|&s| self.reach[s]).sum()
    }

    pub fn infoset_others(&self, game: &GameTree, set: usize) -> f64 {
        let p = game.infosets[set].player;
        game.infosets[set].nodes.iter().map(|&s| self.others[p][s]).sum()
    }
}

/// π^σ(s, ŝ) for a descendant ŝ of s.
pub fn path_prob(game: &GameTree, sigma: &StrategyProfile, from: usize, to: usize) -> f64 {
    game.path_between(from, to)
        .into_iter()
        .map(|(n, a)| sigma.edge_prob(game, n, a))
        .product()
}

pub fn compute_reach(game: &GameTree, sigma: &StrategyProfile) -> Result<ReachTable, StrategyError> {
    if sigma.dists.len() != game.infosets.len() {
        return Err(StrategyError::Coverage {
            expected: game.infosets.len(),
            found: sigma.dists.len(),
        });
    }
    let n = game.nodes.len();
    let np = game.num_players;
    let mut t = ReachTable {
        reach: vec![0.0; n],
        chance: vec![0.0; n],
        own: vec![vec![0.0; n]; np],
        others: vec![vec![0.0; n]; np],
    };
    t.reach[game.root] = 1.0;
    t.chance[game.root] = 1.0;
    for i in 0..np {
        t.own[i][game.root] = 1.0;
        t.others[i][game.root] = 1.0;
    }
    for s in 0..n {
        let node = &game.nodes[s];
        for (a, &c) in node.children.iter().enumerate() {
            let p = sigma.edge_prob(game, s, a);
            t.reach[c] = t.reach[s] * p;
            t.chance[c] = t.chance[s] * if node.is_chance() { p } else { 1.0 };
            for i in 0..np {
                let mine = node.owner == Owner::Player(i);
                t.own[i][c] = t.own[i][s] * if mine { p } else { 1.0 };
                t.others[i][c] = t.others[i][s] * if mine { 1.0 } else { p };
            }
        }
    }
    Ok(t)
}

/// V_i^σ(s) for every player and node: `values[i][s]`.
pub fn node_values(game: &GameTree, sigma: &StrategyProfile) -> Vec<Vec<f64>> {
    let n = game.nodes.len();
    let mut v = vec![vec![0.0; n]; game.num_players];
    for s in (0..n).rev() {
        let node = &game.nodes[s];
        if node.is_leaf() {
            for i in 0..game.num_players {
                v[i][s] = node.utils_f[i];
            }
            continue;
        }
        for i in 0..game.num_players {
            v[i][s] = node
                .children
                .iter()
                .enumerate()
                .map(|(a, &c)| sigma.edge_prob(game, s, a) * v[i][c])
                .sum();
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Node,
    Counterfactual,
    Imperfect,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfosetValue {
    pub value: f64,
    pub kind: ValueKind,
    /// Set when the normalizing reach is zero and `value` is the conventional 0.
    pub unreachable: bool,
}

/// Counterfactual value V_i^σ(I) of a perfect-recall information set.
pub fn counterfactual_value(
    game: &GameTree,
    sigma: &StrategyProfile,
    infoset: usize,
    player: usize,
) -> Result<InfosetValue, StrategyError> {
    let reach = compute_reach(game, sigma)?;
    let values = node_values(game, sigma);
    Ok(counterfactual_value_with(game, &reach, &values, infoset, player))
}

pub(crate) fn counterfactual_value_with(
    game: &GameTree,
    reach: &ReachTable,
    values: &[Vec<f64>],
    infoset: usize,
    player: usize,
) -> InfosetValue {
    let nodes = &game.infosets[infoset].nodes;
    let total: f64 = nodes.iter().map(|&s| reach.others[player][s]).sum();
    if total <= 0.0 {
        return InfosetValue {
            value: 0.0,
            kind: ValueKind::Counterfactual,
            unreachable: true,
        };
    }
    let value = nodes
        .iter()
        .map(|&s| reach.others[player][s] / total * values[player][s])
        .sum();
    InfosetValue {
        value,
        kind: ValueKind::Counterfactual,
        unreachable: false,
    }
}

/// W(I′): reach-weighted mean of node values over an abstract information
/// set, given as the list of its nodes.
pub fn imperfect_value(
    game: &GameTree,
    sigma: &StrategyProfile,
    nodes: &[usize],
    player: usize,
) -> Result<InfosetValue, StrategyError> {
    let reach = compute_reach(game, sigma)?;
    let values = node_values(game, sigma);
    let total: f64 = nodes.iter().map(|&s| reach.reach[s]).sum();
    if total <= 0.0 {
        return Ok(InfosetValue {
            value: 0.0,
            kind: ValueKind::Imperfect,
            unreachable: true,
        });
    }
    Ok(InfosetValue {
        value: nodes
            .iter()
            .map(|&s| reach.reach[s] / total * values[player][s])
            .sum(),
        kind: ValueKind::Imperfect,
        unreachable: false,
    })
}

#[derive(Clone, Debug)]
pub struct BestResponse {
    /// `sigma` with the responder's information sets replaced by a pure best response.
    pub profile: StrategyProfile,
    /// V_i at the root when the responder plays the best response.
    pub value: f64,
}

/// Pure best response of `player` against `sigma`, computed in one
/// bottom-up pass; ties go to the lowest action index.
pub fn best_response(
    game: &GameTree,
    sigma: &StrategyProfile,
    player: usize,
) -> Result<BestResponse, GameError> {
    if !game.has_perfect_recall_for(player) {
        return Err(GameError::ImperfectRecall(player));
    }
    let reach = compute_reach(game, sigma).map_err(|e| GameError::NotATree(e.to_string()))?;
    let mut br = BrState {
        game,
        sigma,
        player,
        others: &reach.others[player],
        value: vec![None; game.nodes.len()],
        choice: vec![None; game.infosets.len()],
    };
    let value = br.value_of(game.root);
    let mut profile = sigma.clone();
    for (set, choice) in br.choice.iter().enumerate() {
        if game.infosets[set].player != player {
            continue;
        }
        // Sets never visited by the recursion lie below unchosen actions.
        let a = choice.unwrap_or(0);
        let d = &mut profile.dists[set];
        d.iter_mut().for_each(|p| *p = 0.0);
        d[a] = 1.0;
    }
    Ok(BestResponse { profile, value })
}

struct BrState<'a> {
    game: &'a GameTree,
    sigma: &'a StrategyProfile,
    player: usize,
    others: &'a [f64],
    value: Vec<Option<f64>>,
    choice: Vec<Option<usize>>,
}

impl BrState<'_> {
    fn value_of(&mut self, s: usize) -> f64 {
        if let Some(v) = self.value[s] {
            return v;
        }
        let node = &self.game.nodes[s];
        let v = match node.owner {
            Owner::Leaf => node.utils_f[self.player],
            Owner::Player(p) if p == self.player => {
                let a = self.decide(node.infoset.unwrap());
                self.value_of(node.children[a])
            }
            _ => {
                let mut acc = 0.0;
                for a in 0..node.children.len() {
                    let p = self.sigma.edge_prob(self.game, s, a);
                    if p > 0.0 {
                        acc += p * self.value_of(node.children[a]);
                    }
                }
                acc
            }
        };
        self.value[s] = Some(v);
        v
    }

    fn decide(&mut self, set: usize) -> usize {
        if let Some(a) = self.choice[set] {
            return a;
        }
        let game = self.game;
        let infoset = &game.infosets[set];
        let mut q = vec![0.0; infoset.actions.len()];
        for &s in &infoset.nodes {
            let w = self.others[s];
            for (a, qa) in q.iter_mut().enumerate() {
                let v = self.value_of(game.nodes[s].children[a]);
                *qa += w * v;
            }
        }
        let mut best = 0;
        for a in 1..q.len() {
            if q[a] > q[best] {
                best = a;
            }
        }
        self.choice[set] = Some(best);
        best
    }
}

/// Regret entries for one information set (or abstract class).
#[derive(Clone, Debug, PartialEq)]
pub struct SetRegret {
    pub per_action: Vec<f64>,
    /// r(I) = max_a r(I, a).
    pub regret: f64,
    /// π^σ(I)
    pub reach: f64,
    /// π^σ_{-i}(I)
    pub reach_others: f64,
    /// True when π_{-i}(I) = 0 and the entries are the conventional zeros.
    pub unreachable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    /// One entry per class of the partition the report was computed for.
    pub sets: Vec<SetRegret>,
    /// Best-response value minus current value at the root, per player.
    pub player_regret: Vec<f64>,
}

impl RegretReport {
    pub fn total_player_regret(&self) -> f64 {
        self.player_regret.iter().sum()
    }
}

/// Immediate regrets r(I, a) for each class of `classes` (lists of original
/// information sets; singletons give the perfect-recall regrets).
///
/// Node weights are π^σ(s)/π^σ(I). When the owner never reaches the class
/// (π^σ(I) = 0 but π_{-i}(I) > 0) its members are weighted uniformly and
/// nodes inside a member by π_{-i}.
pub fn immediate_regrets(
    game: &GameTree,
    sigma: &StrategyProfile,
    classes: &[Vec<usize>],
) -> Result<RegretReport, StrategyError> {
    let reach = compute_reach(game, sigma)?;
    let values = node_values(game, sigma);
    let sets = classes
        .iter()
        .map(|members| class_regret(game, &reach, &values, members))
        .collect();
    let player_regret = (0..game.num_players)
        .map(|i| {
            best_response(game, sigma, i)
                .map(|br| br.value - values[i][game.root])
                .unwrap_or(f64::NAN)
        })
        .collect();
    Ok(RegretReport { sets, player_regret })
}

pub(crate) fn class_weights(
    game: &GameTree,
    reach: &ReachTable,
    members: &[usize],
) -> (Vec<(usize, f64)>, f64, f64) {
    let player = game.infosets[members[0]].player;
    let nodes = || members.iter().flat_map(|&m| game.infosets[m].nodes.iter().copied());
    let total: f64 = nodes().map(|s| reach.reach[s]).sum();
    let others: f64 = nodes().map(|s| reach.others[player][s]).sum();
    if total > 0.0 {
        return (nodes().map(|s| (s, reach.reach[s] / total)).collect(), total, others);
    }
    let live: Vec<(usize, f64)> = members
        .iter()
        .map(|&m| (m, reach.infoset_others(game, m)))
        .filter(|&(_, r)| r > 0.0)
        .collect();
    let mut w = Vec::new();
    for &(m, r) in &live {
        for &s in &game.infosets[m].nodes {
            w.push((s, reach.others[player][s] / r / live.len() as f64));
        }
    }
    (w, total, others)
}

fn class_regret(game: &GameTree, reach: &ReachTable, values: &[Vec<f64>], members: &[usize]) -> SetRegret {
    let player = game.infosets[members[0]].player;
    let n_actions = game.infosets[members[0]].actions.len();
    let (weights, total, others) = class_weights(game, reach, members);
    if weights.is_empty() {
        return SetRegret {
            per_action: vec![0.0; n_actions],
            regret: 0.0,
            reach: total,
            reach_others: others,
            unreachable: true,
        };
    }
    let mut per_action = vec![0.0; n_actions];
    for &(s, w) in &weights {
        let base = values[player][s];
        for (a, r) in per_action.iter_mut().enumerate() {
            *r += w * (values[player][game.nodes[s].children[a]] - base);
        }
    }
    let regret = per_action.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SetRegret {
        per_action,
        regret,
        reach: total,
        reach_others: others,
        unreachable: false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_game;
    use super::*;

    // P1 picks L/R; P2 (not seeing it) picks l/r; a coin flip after (L, l).
    const GAME: &str = "\
game t players=2
node r owner=p1 infoset=R
node x owner=p2 infoset=X
node y owner=p2 infoset=X
edge r L x
edge r R y
node c owner=chance infoset=c0
edge x l c
leaf a utils=4,0
leaf b utils=0,4
edge c h a prob=1/4
edge c t b prob=3/4
leaf d utils=2,2
leaf e utils=1,3
leaf f utils=3,1
edge x r d
edge y l e
edge y r f
";

    fn game() -> GameTree {
        parse_game(GAME).unwrap()
    }

    fn idx(g: &GameTree, id: &str) -> usize {
        g.nodes.iter().position(|n| n.id == id).unwrap()
    }

    #[test]
    fn reach_is_product_of_edges() {
        let g = game();
        let sigma = StrategyProfile::uniform(&g);
        let t = compute_reach(&g, &sigma).unwrap();
        assert_eq!(t.reach[g.root], 1.0);
        let a = idx(&g, "a");
        assert!((t.reach[a] - 0.5 * 0.5 * 0.25).abs() < 1e-15);
        assert!((t.chance[a] - 0.25).abs() < 1e-15);
        assert!((t.others[0][a] - 0.5 * 0.25).abs() < 1e-15);
        // children of every node sum back to the parent
        for s in 0..g.nodes.len() {
            let node = &g.nodes[s];
            if node.is_leaf() {
                continue;
            }
            let sum: f64 = node.children.iter().map(|&c| t.reach[c]).sum();
            assert!((sum - t.reach[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn root_counterfactual_value_is_game_value() {
        let g = game();
        let sigma = StrategyProfile::uniform(&g);
        let v = node_values(&g, &sigma);
        let root_set = g.nodes[g.root].infoset.unwrap();
        let cf = counterfactual_value(&g, &sigma, root_set, 0).unwrap();
        assert!((cf.value - v[0][g.root]).abs() < 1e-12);
        // hand expansion: L -> 0.5*(0.25*4) + 0.5*2 = 1.5 ; R -> 0.5*1 + 0.5*3 = 2
        assert!((v[0][g.root] - 1.75).abs() < 1e-12);
    }

    #[test]
    fn zero_opponent_reach_gives_flagged_zero() {
        let g = game();
        let mut sigma = StrategyProfile::uniform(&g);
        let r = g.infoset_by_id("R").unwrap();
        sigma.dists[r] = vec![1.0, 0.0];
        // P2's set is reached; make it unreachable for P1 by checking P1's own set
        // from P2's perspective instead: P1's root set always has π_{-1} = 1.
        let x = g.infoset_by_id("X").unwrap();
        let cf = counterfactual_value(&g, &sigma, x, 1).unwrap();
        assert!(!cf.unreachable);
        let w = imperfect_value(&g, &sigma, &[idx(&g, "y")], 1).unwrap();
        assert!(w.unreachable);
        assert_eq!(w.value, 0.0);
    }

    #[test]
    fn imperfect_value_of_singleton_is_node_value() {
        let g = game();
        let sigma = StrategyProfile::uniform(&g);
        let v = node_values(&g, &sigma);
        let x = idx(&g, "x");
        let w = imperfect_value(&g, &sigma, &[x], 1).unwrap();
        assert!((w.value - v[1][x]).abs() < 1e-15);
    }

    #[test]
    fn best_response_picks_dominant_action() {
        let g = game();
        let sigma = StrategyProfile::uniform(&g);
        let br = best_response(&g, &sigma, 0).unwrap();
        let r = g.infoset_by_id("R").unwrap();
        assert_eq!(br.profile.dists[r], vec![0.0, 1.0]);
        assert!((br.value - 2.0).abs() < 1e-12);
        // P2: l gives 0.5*(0.75*4) + 0.5*3 = 3.0 ; r gives 0.5*2 + 0.5*1 = 1.5
        let br2 = best_response(&g, &sigma, 1).unwrap();
        assert!((br2.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn regrets_match_deviation_values() {
        let g = game();
        let sigma = StrategyProfile::uniform(&g);
        let classes: Vec<Vec<usize>> = (0..g.infosets.len()).map(|i| vec![i]).collect();
        let rep = immediate_regrets(&g, &sigma, &classes).unwrap();
        let r = g.infoset_by_id("R").unwrap();
        assert!((rep.sets[r].per_action[0] - (1.5 - 1.75)).abs() < 1e-12);
        assert!((rep.sets[r].per_action[1] - (2.0 - 1.75)).abs() < 1e-12);
        assert!((rep.sets[r].regret - 0.25).abs() < 1e-12);
        assert!((rep.player_regret[0] - 0.25).abs() < 1e-12);
        for s in &rep.sets {
            assert!(s.per_action.iter().all(|&x| x <= s.regret));
        }
    }
}
