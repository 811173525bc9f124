//! Vanilla counterfactual regret minimization on CRSWF abstractions.
//!
//! The abstraction only merges information sets, so the solver walks the
//! original tree and keys its regret and strategy tables by abstract set.

use std::fmt::Write as _;

use thiserror::Error;

use crate::crswf::AbstractionMap;
use crate::efg::{best_response, immediate_regrets, node_values, GameTree, Owner, RegretReport, StrategyError, StrategyProfile};

#[derive(Debug, Error, PartialEq)]
pub enum CfrError {
    #[error("iteration count must be positive")]
    NoIterations,
    #[error("abstraction covers {found} information sets, game has {expected}")]
    MapSize { expected: usize, found: usize },
    #[error("abstract set {0} merges sets with different action labels")]
    Labels(String),
    #[error("abstract strategy has {found} sets, abstraction has {expected}")]
    Coverage { expected: usize, found: usize },
    #[error("strategy file line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Leaf,
    Chance,
    /// (player, abstract set)
    Decision(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
struct Flat {
    kind: Kind,
    first: usize,
    len: usize,
    utils: [f64; 2],
}

/// The original tree with normalization dummies collapsed, in a flat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledGame {
    nodes: Vec<Flat>,
    children: Vec<usize>,
    /// Chance probability per entry of `children` (1 for decisions).
    probs: Vec<f64>,
    /// Offset of each abstract set in the regret/strategy tables.
    offset: Vec<usize>,
    actions: Vec<usize>,
}

impl CompiledGame {
    pub fn new(game: &GameTree, map: &AbstractionMap) -> Result<Self, CfrError> {
        if map.class_assignment().len() != game.infosets.len() {
            return Err(CfrError::MapSize {
                expected: game.infosets.len(),
                found: map.class_assignment().len(),
            });
        }
        let mut offset = Vec::with_capacity(map.num_classes());
        let mut actions = Vec::with_capacity(map.num_classes());
        let mut total = 0;
        for (c, members) in map.classes().iter().enumerate() {
            let labels = &game.infosets[members[0]].actions;
            if members.iter().any(|&m| &game.infosets[m].actions != labels) {
                return Err(CfrError::Labels(map.name(c).to_string()));
            }
            offset.push(total);
            actions.push(labels.len());
            total += labels.len();
        }
        let skip = |mut s: usize| {
            while game.nodes[s].dummy && game.nodes[s].children.len() == 1 {
                s = game.nodes[s].children[0];
            }
            s
        };
        let mut out = CompiledGame {
            nodes: Vec::new(),
            children: Vec::new(),
            probs: Vec::new(),
            offset,
            actions,
        };
        // Breadth-first, so each node's children are contiguous.
        let mut queue = std::collections::VecDeque::from([skip(game.root)]);
        let mut next = 1;
        while let Some(s) = queue.pop_front() {
            let node = &game.nodes[s];
            let kind = match node.owner {
                Owner::Leaf => Kind::Leaf,
                Owner::Chance => Kind::Chance,
                Owner::Player(p) => Kind::Decision(p, map.class_of(node.infoset.unwrap())),
            };
            let mut utils = [0.0; 2];
            for (k, u) in node.utils_f.iter().take(2).enumerate() {
                utils[k] = *u;
            }
            out.nodes.push(Flat {
                kind,
                first: out.children.len(),
                len: node.children.len(),
                utils,
            });
            for (a, &c) in node.children.iter().enumerate() {
                out.children.push(next);
                next += 1;
                out.probs.push(if node.is_chance() { node.probs_f[a] } else { 1.0 });
                queue.push_back(skip(c));
            }
        }
        Ok(out)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Cumulative regrets and strategy weights per abstract set and action.
#[derive(Clone, Debug, PartialEq)]
pub struct CfrState {
    pub regret: Vec<f64>,
    pub strategy_sum: Vec<f64>,
    pub iterations: u64,
    /// Recorded for reproducibility; vanilla CFR draws no random numbers.
    pub seed: u64,
}

/// A CFR run in progress.
#[derive(Clone, Debug)]
pub struct Solver {
    pub game: CompiledGame,
    pub state: CfrState,
    scratch: Vec<f64>,
    /// Scratch floats per recursion level.
    stride: usize,
}

fn regret_matching(regret: &[f64], out: &mut [f64]) {
    let pos: f64 = regret.iter().map(|r| r.max(0.0)).sum();
    if pos > 0.0 {
        for (o, r) in out.iter_mut().zip(regret) {
            *o = r.max(0.0) / pos;
        }
    } else {
        out.fill(1.0 / out.len() as f64);
    }
}

impl Solver {
    pub fn new(game: &GameTree, map: &AbstractionMap, seed: u64) -> Result<Self, CfrError> {
        let compiled = CompiledGame::new(game, map)?;
        let size: usize = compiled.actions.iter().sum();
        let width = compiled.actions.iter().copied().max().unwrap_or(1);
        Ok(Solver {
            scratch: vec![0.0; 2 * width * 64],
            stride: 2 * width,
            state: CfrState {
                regret: vec![0.0; size],
                strategy_sum: vec![0.0; size],
                iterations: 0,
                seed,
            },
            game: compiled,
        })
    }

    /// Runs iterations until the total reaches `t`.
    pub fn run_until(&mut self, t: u64) {
        while self.state.iterations < t {
            for p in 0..2 {
                self.walk(0, p, 1.0, 1.0, 0);
            }
            self.state.iterations += 1;
        }
    }

    /// Returns the value of `s` for `player`; `depth` indexes the scratch stack.
    fn walk(&mut self, s: usize, player: usize, own: f64, others: f64, depth: usize) -> f64 {
        let Flat { kind, first, len, utils } = self.game.nodes[s].clone();
        match kind {
            Kind::Leaf => utils[player],
            Kind::Chance => {
                let mut v = 0.0;
                for k in first..first + len {
                    let p = self.game.probs[k];
                    if p > 0.0 {
                        v += p * self.walk(self.game.children[k], player, own, others * p, depth);
                    }
                }
                v
            }
            Kind::Decision(p, c) => {
                let off = self.game.offset[c];
                let width = self.game.actions[c];
                let base = depth * self.stride;
                if self.scratch.len() < base + self.stride {
                    self.scratch.resize(base + self.stride, 0.0);
                }
                let (sigma, vals) = (base, base + width);
                {
                    let (r, out) = (&self.state.regret[off..off + width], &mut self.scratch[sigma..sigma + width]);
                    regret_matching(r, out);
                }
                let mut v = 0.0;
                for a in 0..width {
                    let pa = self.scratch[sigma + a];
                    let child = self.game.children[first + a];
                    let va = if p == player {
                        self.walk(child, player, own * pa, others, depth + 1)
                    } else if pa > 0.0 || own > 0.0 {
                        // Still visited at pa = 0: the strategy sums below are weighted by own reach.
                        self.walk(child, player, own, others * pa, depth + 1)
                    } else {
                        0.0
                    };
                    self.scratch[vals + a] = va;
                    v += pa * va;
                }
                if p == player {
                    for a in 0..width {
                        self.state.regret[off + a] += others * (self.scratch[vals + a] - v);
                        self.state.strategy_sum[off + a] += own * self.scratch[sigma + a];
                    }
                }
                v
            }
        }
    }

    /// Regret-matching distribution per abstract set.
    pub fn current_strategy(&self) -> Vec<Vec<f64>> {
        self.per_set(|r, s| regret_matching(r, s), &self.state.regret)
    }

    /// Time-averaged distribution per abstract set (uniform where never reached).
    pub fn average_strategy(&self) -> Vec<Vec<f64>> {
        self.per_set(
            |w, s| {
                let total: f64 = w.iter().sum();
                if total > 0.0 {
                    for (o, x) in s.iter_mut().zip(w) {
                        *o = x / total;
                    }
                } else {
                    s.fill(1.0 / s.len() as f64);
                }
            },
            &self.state.strategy_sum,
        )
    }

    fn per_set<F: Fn(&[f64], &mut [f64])>(&self, f: F, table: &[f64]) -> Vec<Vec<f64>> {
        self.game
            .offset
            .iter()
            .zip(&self.game.actions)
            .map(|(&o, &n)| {
                let mut d = vec![0.0; n];
                f(&table[o..o + n], &mut d);
                d
            })
            .collect()
    }
}

/// Each original set plays the distribution of its abstract set.
pub fn lift_strategy(
    abstract_sigma: &[Vec<f64>],
    map: &AbstractionMap,
    original: &GameTree,
) -> Result<StrategyProfile, CfrError> {
    if abstract_sigma.len() != map.num_classes() {
        return Err(CfrError::Coverage {
            expected: map.num_classes(),
            found: abstract_sigma.len(),
        });
    }
    let mut dists = Vec::with_capacity(original.infosets.len());
    for (i, set) in original.infosets.iter().enumerate() {
        let c = map.class_of(i);
        if abstract_sigma[c].len() != set.actions.len()
            || original.infosets[map.members(c)[0]].actions != set.actions
        {
            return Err(CfrError::Labels(map.name(c).to_string()));
        }
        dists.push(abstract_sigma[c].clone());
    }
    Ok(StrategyProfile { dists })
}

/// Full-game regret of each player: best-response value minus current value.
pub fn evaluate_in_original(original: &GameTree, sigma: &StrategyProfile) -> Result<Vec<f64>, StrategyError> {
    sigma.validate(original)?;
    let v = node_values(original, sigma);
    (0..original.num_players)
        .map(|i| {
            best_response(original, sigma, i)
                .map(|br| (br.value - v[i][original.root]).max(0.0))
                .map_err(|_| StrategyError::Missing(format!("no perfect recall for player {}", i + 1)))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CfrOutcome {
    /// Average strategy per abstract set.
    pub average: Vec<Vec<f64>>,
    /// The average strategy played in the original game.
    pub lifted: StrategyProfile,
    /// Abstract immediate regrets, measured with W-values.
    pub regrets: RegretReport,
    pub state: CfrState,
}

/// Runs `iterations` of CFR on the abstraction of `game` given by `map`.
pub fn cfr_run(game: &GameTree, map: &AbstractionMap, iterations: i64, seed: u64) -> Result<CfrOutcome, CfrError> {
    if iterations <= 0 {
        return Err(CfrError::NoIterations);
    }
    let mut solver = Solver::new(game, map, seed)?;
    solver.run_until(iterations as u64);
    let average = solver.average_strategy();
    let lifted = lift_strategy(&average, map, game)?;
    let regrets = immediate_regrets(game, &lifted, map.classes())?;
    Ok(CfrOutcome {
        average,
        lifted,
        regrets,
        state: solver.state,
    })
}

/// `infoset_id,action_label,probability` rows, probabilities at 17
/// significant digits.
pub fn write_strategy_csv(ids: &[String], actions: &[Vec<String>], dists: &[Vec<f64>]) -> String {
    let mut out = String::from("infoset_id,action_label,probability\n");
    for ((id, labels), d) in ids.iter().zip(actions).zip(dists) {
        for (label, p) in labels.iter().zip(d) {
            writeln!(out, "{id},{label},{p:.16e}").unwrap();
        }
    }
    out
}

/// Strategy CSV of the original game's profile.
pub fn profile_csv(game: &GameTree, sigma: &StrategyProfile) -> String {
    let ids: Vec<String> = game.infosets.iter().map(|s| s.id.clone()).collect();
    let actions: Vec<Vec<String>> = game.infosets.iter().map(|s| s.actions.clone()).collect();
    write_strategy_csv(&ids, &actions, &sigma.dists)
}

/// Strategy CSV keyed by abstract set names.
pub fn abstract_csv(game: &GameTree, map: &AbstractionMap, dists: &[Vec<f64>]) -> String {
    let ids: Vec<String> = (0..map.num_classes()).map(|c| map.name(c).to_string()).collect();
    let actions: Vec<Vec<String>> = map
        .classes()
        .iter()
        .map(|m| game.infosets[m[0]].actions.clone())
        .collect();
    write_strategy_csv(&ids, &actions, dists)
}

/// Reads a strategy CSV for the original game; sets not listed stay uniform.
pub fn read_profile_csv(game: &GameTree, text: &str) -> Result<StrategyProfile, CfrError> {
    let mut sigma = StrategyProfile::uniform(game);
    for (k, raw) in text.lines().enumerate().skip(1) {
        let line = k + 1;
        let err = |msg: &str| CfrError::Csv {
            line,
            msg: msg.to_string(),
        };
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        let [id, label, p] = fields.as_slice() else {
            return Err(err("expected three fields"));
        };
        let set = game.infoset_by_id(id).ok_or_else(|| err("unknown information set"))?;
        let a = game.infosets[set]
            .actions
            .iter()
            .position(|x| x == label)
            .ok_or_else(|| err("unknown action"))?;
        sigma.dists[set][a] = p.trim().parse().map_err(|_| err("bad probability"))?;
    }
    sigma.validate(game)?;
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{GameBuilder, Rational};
    use crate::games::{make_cdrp, make_drp, make_figure1_game, DrpSpec};

    #[test]
    fn rejects_nonpositive_iterations() {
        let (g, map) = make_figure1_game();
        assert!(matches!(cfr_run(&g, &map, 0, 1), Err(CfrError::NoIterations)));
    }

    #[test]
    fn single_action_game_has_no_regret() {
        let mut b = GameBuilder::new("line", 2);
        b.decision("a", 0, "A").unwrap();
        b.decision("b", 1, "B").unwrap();
        b.leaf("z", vec![Rational::from_integer(1.into()), Rational::from_integer(2.into())]).unwrap();
        b.edge("a", "go", "b", None);
        b.edge("b", "go", "z", None);
        let g = b.build().unwrap();
        let out = cfr_run(&g, &AbstractionMap::identity(&g), 1, 0).unwrap();
        assert!(out.state.regret.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn lift_of_identity_is_identity_and_merged_sets_agree() {
        let (g, map) = make_figure1_game();
        let out = cfr_run(&g, &map, 50, 3).unwrap();
        let a = g.infoset_by_id("P1xa").unwrap();
        let b = g.infoset_by_id("P1ya").unwrap();
        assert_eq!(out.lifted.dists[a], out.lifted.dists[b]);
        let id = AbstractionMap::identity(&g);
        let lifted = lift_strategy(&out.lifted.dists, &id, &g).unwrap();
        assert_eq!(lifted, out.lifted);
    }

    #[test]
    fn small_drp_converges() {
        let g = make_drp(2).unwrap();
        let map = AbstractionMap::identity(&g);
        let early = cfr_run(&g, &map, 100, 0).unwrap();
        let late = cfr_run(&g, &map, 3000, 0).unwrap();
        let r0: f64 = evaluate_in_original(&g, &early.lifted).unwrap().iter().sum();
        let r1: f64 = evaluate_in_original(&g, &late.lifted).unwrap().iter().sum();
        assert!(r1 < r0 && r1 < 0.1, "{r0} {r1}");
    }

    #[test]
    fn strategy_csv_round_trips() {
        let g = make_drp(2).unwrap();
        let out = cfr_run(&g, &AbstractionMap::identity(&g), 37, 0).unwrap();
        let text = profile_csv(&g, &out.lifted);
        let back = read_profile_csv(&g, &text).unwrap();
        assert_eq!(back, out.lifted);
    }

    #[test]
    fn runs_are_bit_identical() {
        let (g, map) = make_figure1_game();
        let a = cfr_run(&g, &map, 200, 9).unwrap();
        let b = cfr_run(&g, &map, 200, 9).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn averages_sets_the_opponent_stops_reaching() {
        // Both players always roll the same value, so exact zeros are common.
        let g = make_cdrp(&DrpSpec::correlated(2, Rational::new(1.into(), 4.into()))).unwrap();
        let out = cfr_run(&g, &AbstractionMap::identity(&g), 1000, 0).unwrap();
        let r: f64 = evaluate_in_original(&g, &out.lifted).unwrap().iter().sum();
        assert!(r < 0.05, "{r}");
    }
}
