use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use num::{One, Signed};
use thiserror::Error;

use crate::efg::{parse_rational, GameTree, Rational};

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown information set {id}")]
    UnknownInfoset { line: usize, id: String },
    #[error("information set {0} is assigned to two abstract sets")]
    Duplicate(String),
    #[error("abstract set name {0} is used twice")]
    DuplicateName(String),
    #[error("scaling factor for ({0}, {1}) must be positive")]
    NonPositiveDelta(String, String),
    #[error("scaling factor given for {0} and {1}, which are not merged")]
    DeltaOutsideClass(String, String),
}

/// A partition of the original information sets into abstract ones, plus
/// any user-fixed scaling factors δ between merged sets.
///
/// Classes are ordered by their smallest member; members are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractionMap {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
    names: Vec<String>,
    deltas: BTreeMap<(usize, usize), Rational>,
}

impl AbstractionMap {
    pub fn identity(game: &GameTree) -> Self {
        Self::from_classes(game, Vec::new()).expect("identity map is always valid")
    }

    /// Builds a map from named groups of original information-set indices.
    /// Sets not mentioned stay singletons named after themselves.
    pub fn from_classes(game: &GameTree, groups: Vec<(String, Vec<usize>)>) -> Result<Self, MapError> {
        let n = game.infosets.len();
        let mut seen = vec![false; n];
        let mut named: Vec<(String, Vec<usize>)> = Vec::new();
        for (name, mut members) in groups {
            members.sort_unstable();
            members.dedup();
            for &m in &members {
                if std::mem::replace(&mut seen[m], true) {
                    return Err(MapError::Duplicate(game.infosets[m].id.clone()));
                }
            }
            if !members.is_empty() {
                named.push((name, members));
            }
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                named.push((game.infosets[i].id.clone(), vec![i]));
            }
        }
        named.sort_by_key(|(_, m)| m[0]);
        let mut names_seen = HashSet::new();
        for (name, _) in &named {
            if !names_seen.insert(name.as_str()) {
                return Err(MapError::DuplicateName(name.clone()));
            }
        }
        let mut class_of = vec![0; n];
        for (c, (_, members)) in named.iter().enumerate() {
            for &m in members {
                class_of[m] = c;
            }
        }
        let (names, classes) = named.into_iter().unzip();
        Ok(AbstractionMap {
            class_of,
            classes,
            names,
            deltas: BTreeMap::new(),
        })
    }

    /// Builds a map from a class index per information set.
    pub fn from_assignment(game: &GameTree, assignment: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in assignment.iter().enumerate() {
            groups.entry(c).or_default().push(i);
        }
        let groups = groups
            .into_values()
            .map(|m| {
                let name = if m.len() == 1 {
                    game.infosets[m[0]].id.clone()
                } else {
                    format!("{}+{}", game.infosets[m[0]].id, m.len() - 1)
                };
                (name, m)
            })
            .collect();
        Self::from_classes(game, groups).expect("assignment yields a partition")
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, infoset: usize) -> usize {
        self.class_of[infoset]
    }

    pub fn class_assignment(&self) -> &[usize] {
        &self.class_of
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.classes[class]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    pub fn class_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_identity(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Ordered pairs (I, Ĭ) with I ≠ Ĭ inside one class.
    pub fn merged_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.classes.iter().flat_map(|c| {
            c.iter()
                .flat_map(move |&a| c.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        })
    }

    /// User-fixed δ for the ordered pair, if any.
    pub fn delta(&self, a: usize, b: usize) -> Option<&Rational> {
        self.deltas.get(&(a, b))
    }

    /// Fixes δ_{a,b} = `delta` and δ_{b,a} = 1/`delta`.
    pub fn set_delta(&mut self, game: &GameTree, a: usize, b: usize, delta: Rational) -> Result<(), MapError> {
        let ids = || (game.infosets[a].id.clone(), game.infosets[b].id.clone());
        if !delta.is_positive() {
            let (x, y) = ids();
            return Err(MapError::NonPositiveDelta(x, y));
        }
        if a == b || self.class_of[a] != self.class_of[b] {
            let (x, y) = ids();
            return Err(MapError::DeltaOutsideClass(x, y));
        }
        self.deltas.insert((b, a), Rational::one() / &delta);
        self.deltas.insert((a, b), delta);
        Ok(())
    }

    /// Parses the map-file format:
    ///
    /// ```text
    /// merge <abstract-id> = <iid>,<iid>,...
    /// delta <iid-a> <iid-b> = <num>/<den>
    /// ```
    pub fn parse(game: &GameTree, text: &str) -> Result<Self, MapError> {
        let mut groups = Vec::new();
        let mut deltas = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |msg: &str| MapError::Syntax {
                line,
                msg: msg.to_string(),
            };
            let (lhs, rhs) = content.split_once('=').ok_or_else(|| syntax("expected '='"))?;
            let lhs: Vec<&str> = lhs.split_whitespace().collect();
            let lookup = |id: &str| {
                game.infoset_by_id(id).ok_or_else(|| MapError::UnknownInfoset {
                    line,
                    id: id.to_string(),
                })
            };
            match lhs.as_slice() {
                ["merge", name] => {
                    let members = rhs
                        .split(',')
                        .map(|t| lookup(t.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    groups.push((name.to_string(), members));
                }
                ["delta", a, b] => {
                    let d = parse_rational(rhs).ok_or_else(|| syntax("bad scaling factor"))?;
                    deltas.push((lookup(a)?, lookup(b)?, d));
                }
                _ => return Err(syntax("expected 'merge <id> = ...' or 'delta <a> <b> = ...'")),
            }
        }
        let mut map = Self::from_classes(game, groups)?;
        for (a, b, d) in deltas {
            map.set_delta(game, a, b, d)?;
        }
        Ok(map)
    }

    pub fn emit(&self, game: &GameTree) -> String {
        let mut out = String::new();
        for (c, members) in self.classes.iter().enumerate() {
            if members.len() < 2 {
                continue;
            }
            let ids: Vec<&str> = members.iter().map(|&m| game.infosets[m].id.as_str()).collect();
            writeln!(out, "merge {} = {}", self.names[c], ids.join(",")).unwrap();
        }
        for ((a, b), d) in &self.deltas {
            if a < b {
                writeln!(out, "delta {} {} = {}", game.infosets[*a].id, game.infosets[*b].id, d).unwrap();
            }
        }
        out
    }
}
