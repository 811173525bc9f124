//! Die-roll poker and its correlated variant.

use num::{BigInt, Signed, Zero};
use thiserror::Error;

use crate::efg::{GameBuilder, GameError, GameTree, Rational};

pub const ANTE: i64 = 1;
pub const RAISE_SIZES: [i64; 2] = [2, 4];
pub const MAX_RAISES: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum DrpError {
    #[error("a die needs at least 2 sides, got {0}")]
    Sides(u32),
    #[error("correlation must be non-negative, got {0}")]
    NegativeCorrelation(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrpSpec {
    pub sides: u32,
    /// Correlation c of the joint roll distribution (0 gives plain DRP).
    pub correlation: Rational,
}

impl DrpSpec {
    pub fn plain(sides: u32) -> Self {
        DrpSpec {
            sides,
            correlation: Rational::zero(),
        }
    }

    pub fn correlated(sides: u32, correlation: Rational) -> Self {
        DrpSpec { sides, correlation }
    }

    fn validate(&self) -> Result<(), DrpError> {
        if self.sides < 2 {
            return Err(DrpError::Sides(self.sides));
        }
        if self.correlation.is_negative() {
            return Err(DrpError::NegativeCorrelation(self.correlation.to_string()));
        }
        Ok(())
    }

    /// Joint probability of rolling `(v1, v2)` in one round, indexed `[v1-1][v2-1]`.
    ///
    /// Off-diagonal pairs get `max(0, 1/n² - c|v1-v2|)`; the diagonal takes
    /// the remaining mass of its row so that each player's own roll stays
    /// uniform and the table sums to exactly 1.
    pub fn pair_probabilities(&self) -> Vec<Vec<Rational>> {
        let n = self.sides as i64;
        let base = Rational::new(BigInt::from(1), BigInt::from(n * n));
        let row_mass = Rational::new(BigInt::from(1), BigInt::from(n));
        let mut table = vec![vec![Rational::zero(); n as usize]; n as usize];
        for v1 in 0..n {
            let mut off = Rational::zero();
            for v2 in 0..n {
                if v1 == v2 {
                    continue;
                }
                let p = &base - &self.correlation * Rational::from_integer(BigInt::from((v1 - v2).abs()));
                let p = if p.is_negative() { Rational::zero() } else { p };
                off += &p;
                table[v1 as usize][v2 as usize] = p;
            }
            table[v1 as usize][v1 as usize] = &row_mass - off;
        }
        table
    }
}

/// Betting position inside one round.
#[derive(Clone, Debug)]
struct Round {
    history: String,
    raises: usize,
    /// Chips each player has put in, including earlier rounds.
    committed: [i64; 2],
}

impl Round {
    fn to_act(&self) -> usize {
        self.history.len() % 2
    }

    fn facing_bet(&self) -> bool {
        self.committed[0] != self.committed[1]
    }

    fn actions(&self) -> Vec<char> {
        let mut a = Vec::with_capacity(3);
        if self.facing_bet() {
            a.push('f');
        }
        a.push('c');
        if self.raises < MAX_RAISES {
            a.push('r');
        }
        a
    }
}

enum Step {
    Continue(Round),
    Fold { folder: usize, committed: [i64; 2] },
    RoundOver([i64; 2]),
}

fn play(round: &Round, action: char, raise: i64) -> Step {
    let p = round.to_act();
    let mut next = round.clone();
    next.history.push(action);
    match action {
        'f' => Step::Fold {
            folder: p,
            committed: round.committed,
        },
        'c' => {
            next.committed[p] = next.committed[1 - p];
            if round.history.is_empty() {
                Step::Continue(next)
            } else {
                Step::RoundOver(next.committed)
            }
        }
        'r' => {
            next.committed[p] = next.committed[1 - p] + raise;
            next.raises += 1;
            Step::Continue(next)
        }
        _ => unreachable!(),
    }
}

struct Gen<'a> {
    b: GameBuilder,
    probs: &'a [Vec<Rational>],
    labels: Vec<(usize, usize, String)>,
}

impl Gen<'_> {
    /// Builds the subtree for the betting of round `r`, starting at node `id`.
    fn betting(
        &mut self,
        id: &str,
        r: usize,
        round: Round,
        rolls: &[(usize, usize)],
        past: &[String],
    ) -> Result<(), GameError> {
        let p = round.to_act();
        let own: Vec<String> = rolls
            .iter()
            .map(|&(a, b)| if p == 0 { a + 1 } else { b + 1 }.to_string())
            .collect();
        let mut public = past.to_vec();
        public.push(round.history.clone());
        let infoset = format!("P{}:{}:{}", p + 1, own.join("."), public.join("/"));
        self.b.decision(id, p, &infoset)?;
        for action in round.actions() {
            let child = format!("{id}{action}");
            self.b.edge(id, &action.to_string(), &child, None);
            match play(&round, action, RAISE_SIZES[r]) {
                Step::Continue(next) => self.betting(&child, r, next, rolls, past)?,
                Step::Fold { folder, committed } => {
                    let loss = committed[folder];
                    let mut u = [loss, loss];
                    u[folder] = -loss;
                    self.leaf(&child, u)?;
                }
                Step::RoundOver(committed) => {
                    let mut history = past.to_vec();
                    history.push(round.history.clone() + &action.to_string());
                    if r + 1 < RAISE_SIZES.len() {
                        self.b.chance(&child, "dice")?;
                        self.roll_edges(&child, r + 1, committed, rolls, &history)?;
                    } else {
                        self.showdown(&child, committed, rolls)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn roll_edges(
        &mut self,
        chance: &str,
        r: usize,
        committed: [i64; 2],
        rolls: &[(usize, usize)],
        history: &[String],
    ) -> Result<(), GameError> {
        for k in 0..self.labels.len() {
            let (v1, v2, label) = self.labels[k].clone();
            let p = self.probs[v1][v2].clone();
            let child = format!("{chance}/{label}:");
            self.b.edge(chance, &label, &child, Some(p));
            let mut rolls = rolls.to_vec();
            rolls.push((v1, v2));
            let round = Round {
                history: String::new(),
                raises: 0,
                committed,
            };
            self.betting(&child, r, round, &rolls, history)?;
        }
        Ok(())
    }

    fn showdown(&mut self, id: &str, committed: [i64; 2], rolls: &[(usize, usize)]) -> Result<(), GameError> {
        let s1: usize = rolls.iter().map(|r| r.0).sum();
        let s2: usize = rolls.iter().map(|r| r.1).sum();
        let pot = committed[0];
        let u = match s1.cmp(&s2) {
            std::cmp::Ordering::Greater => [pot, -pot],
            std::cmp::Ordering::Less => [-pot, pot],
            std::cmp::Ordering::Equal => [0, 0],
        };
        self.leaf(id, u)
    }

    fn leaf(&mut self, id: &str, u: [i64; 2]) -> Result<(), GameError> {
        let utils = u.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect();
        self.b.leaf(id, utils)
    }
}

/// Die-roll poker (or its correlated variant when `spec.correlation > 0`).
///
/// Each round starts with a joint roll of both players' dice; player 1
/// acts first. Information sets are named `P<k>:<own rolls>:<public history>`.
pub fn make_cdrp(spec: &DrpSpec) -> Result<GameTree, DrpError> {
    spec.validate()?;
    let probs = spec.pair_probabilities();
    let n = spec.sides as usize;
    let labels = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b, format!("{}-{}", a + 1, b + 1))))
        .collect();
    let name = if spec.correlation.is_zero() {
        format!("drp{}", spec.sides)
    } else {
        format!("cdrp{}_{}", spec.sides, spec.correlation)
    };
    let mut g = Gen {
        b: GameBuilder::new(name, 2),
        probs: &probs,
        labels,
    };
    g.b.chance("root", "dice")?;
    g.roll_edges("root", 0, [ANTE, ANTE], &[], &[])?;
    Ok(g.b.build()?)
}

pub fn make_drp(sides: u32) -> Result<GameTree, DrpError> {
    make_cdrp(&DrpSpec::plain(sides))
}
