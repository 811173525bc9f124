//! Line-oriented text format for games.
//!
//! ```text
//! game <name> players=<N>
//! node <id> owner=<p<k>|chance> infoset=<iid>
//! edge <parent-id> <action-label> <child-id> [prob=<num>/<den>]
//! leaf <id> utils=<q1>,<q2>,...
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use num::{BigInt, One, Zero};

use super::tree::{GameBuilder, GameTree, Owner, Rational};
use super::GameError;

/// Parses `a/b`, an integer, or a finite decimal (`0.25`) exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let (negative, int) = match int.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int),
        };
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(frac) || !(int.is_empty() || digits(int)) {
            return None;
        }
        let whole = if int.is_empty() { BigInt::zero() } else { BigInt::from_str(int).ok()? };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let value = Rational::from_integer(whole) + Rational::new(BigInt::from_str(frac).ok()?, scale);
        return Some(if negative { -value } else { value });
    }
    BigInt::from_str(text).ok().map(Rational::from_integer)
}

fn syntax(line: usize, msg: impl Into<String>) -> GameError {
    GameError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn keyed<'a>(tok: &'a str, key: &str, line: usize) -> Result<&'a str, GameError> {
    tok.strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| syntax(line, format!("expected {key}=..., found {tok}")))
}

pub fn parse_game(text: &str) -> Result<GameTree, GameError> {
    let mut builder: Option<GameBuilder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks[0] == "game" {
            if builder.is_some() {
                return Err(syntax(line, "duplicate game header"));
            }
            if toks.len() != 3 {
                return Err(syntax(line, "expected: game <name> players=<N>"));
            }
            let n: usize = keyed(toks[2], "players", line)?
                .parse()
                .map_err(|_| syntax(line, "players must be a positive integer"))?;
            if n == 0 {
                return Err(syntax(line, "players must be a positive integer"));
            }
            builder = Some(GameBuilder::new(toks[1], n));
            continue;
        }
        let b = builder
            .as_mut()
            .ok_or_else(|| syntax(line, "missing game header"))?;
        match toks[0] {
            "node" => {
                if toks.len() != 4 {
                    return Err(syntax(line, "expected: node <id> owner=<..> infoset=<..>"));
                }
                let owner = keyed(toks[2], "owner", line)?;
                let infoset = keyed(toks[3], "infoset", line)?;
                if owner == "chance" {
                    b.chance_at(toks[1], infoset, line)?;
                } else {
                    let k: usize = owner
                        .strip_prefix('p')
                        .and_then(|k| k.parse().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| syntax(line, format!("bad owner {owner}")))?;
                    b.decision_at(toks[1], k - 1, infoset, line)?;
                }
            }
            "edge" => {
                let prob = match toks.len() {
                    4 => None,
                    5 => Some(
                        parse_rational(keyed(toks[4], "prob", line)?)
                            .ok_or_else(|| syntax(line, format!("bad probability {}", toks[4])))?,
                    ),
                    _ => return Err(syntax(line, "expected: edge <parent> <label> <child> [prob=a/b]")),
                };
                b.edge_at(toks[1], toks[2], toks[3], prob, line);
            }
            "leaf" => {
                if toks.len() != 3 {
                    return Err(syntax(line, "expected: leaf <id> utils=<q1>,<q2>,..."));
                }
                let utils = keyed(toks[2], "utils", line)?
                    .split(',')
                    .map(|q| parse_rational(q).ok_or_else(|| syntax(line, format!("bad utility {q}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                b.leaf_at(toks[1], utils, line)?;
            }
            other => return Err(syntax(line, format!("unknown directive {other}"))),
        }
    }
    builder.ok_or_else(|| syntax(0, "empty document"))?.build()
}

/// Writes a game in the text format, in original (unshifted) utility units
/// and without normalization dummies, so that parsing the output rebuilds
/// an identical tree.
pub fn emit_game(game: &GameTree) -> String {
    let mut out = String::new();
    writeln!(out, "game {} players={}", game.name, game.num_players).unwrap();
    let skip_through = |mut s: usize| {
        while game.nodes[s].dummy {
            s = game.nodes[s].children[0];
        }
        s
    };
    for node in game.nodes.iter().filter(|n| !n.dummy) {
        match node.owner {
            Owner::Leaf => {
                let utils: Vec<String> = node
                    .utils
                    .iter()
                    .zip(&game.shift)
                    .map(|(u, s)| (u - s).to_string())
                    .collect();
                writeln!(out, "leaf {} utils={}", node.id, utils.join(",")).unwrap();
            }
            owner => {
                writeln!(out, "node {} owner={} infoset={}", node.id, owner, node.infoset_label).unwrap();
                for (a, &c) in node.children.iter().enumerate() {
                    let target = &game.nodes[skip_through(c)].id;
                    if node.is_chance() {
                        let p = &node.probs[a];
                        let p = if p.is_one() { "1/1".to_string() } else { p.to_string() };
                        writeln!(out, "edge {} {} {} prob={}", node.id, node.actions[a], target, p).unwrap();
                    } else {
                        writeln!(out, "edge {} {} {}", node.id, node.actions[a], target).unwrap();
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/6"), Some(Rational::new(1.into(), 2.into())));
        assert_eq!(parse_rational("-4"), Some(Rational::from_integer((-4).into())));
        assert_eq!(parse_rational("0.25"), Some(Rational::new(1.into(), 4.into())));
        assert_eq!(parse_rational("-1.5"), Some(Rational::new((-3).into(), 2.into())));
        assert_eq!(parse_rational("-0.5"), Some(Rational::new((-1).into(), 2.into())));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn leaf_root_is_rejected() {
        let err = parse_game("game g players=1\nleaf z utils=1\n").unwrap_err();
        assert_eq!(err, GameError::LeafRoot);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_game("game g players=2\n\n# c\nnode r owner=p3 infoset=R\n").unwrap_err();
        assert!(matches!(err, GameError::Syntax { line: 4, .. }), "{err:?}");
        let err = parse_game("game g players=1\nnode r owner=p1 infoset=R\nedge r a z\n").unwrap_err();
        assert!(matches!(err, GameError::DanglingNode { line: 3, .. }), "{err:?}");
        let err = parse_game("game g players=1\nbogus\n").unwrap_err();
        assert!(matches!(err, GameError::Syntax { line: 2, .. }));
    }

    #[test]
    fn chance_must_sum_to_one() {
        let doc = "game g players=1\nnode r owner=p1 infoset=R\nnode c owner=chance infoset=C\n\
                   leaf a utils=1\nleaf b utils=0\nedge r go c\nedge c h a prob=1/2\nedge c t b prob=1/3\n";
        assert!(matches!(parse_game(doc), Err(GameError::ProbabilitySum { .. })));
    }

    #[test]
    fn mixed_owner_infoset_is_rejected() {
        let doc = "game g players=2\nnode r owner=p1 infoset=R\nnode x owner=p2 infoset=R\n\
                   leaf a utils=1,0\nleaf b utils=0,1\nedge r go x\nedge x l a\nedge x r b\n";
        assert!(matches!(parse_game(doc), Err(GameError::MixedInfoset { .. })));
    }

    #[test]
    fn negative_utilities_are_shifted_and_leaves_padded() {
        let doc = "game g players=2\nnode r owner=p1 infoset=R\nnode x owner=p2 infoset=X\n\
                   leaf a utils=-2,2\nleaf b utils=1,-1\nleaf c utils=3,-3\n\
                   edge r l a\nedge r r x\nedge x l b\nedge x r c\n";
        let g = parse_game(doc).unwrap();
        assert_eq!(g.shift, vec![Rational::from_integer(2.into()), Rational::from_integer(3.into())]);
        let depths: Vec<usize> = g.leaves().map(|z| g.nodes[z].depth).collect();
        assert!(depths.iter().all(|&d| d == 2), "{depths:?}");
        assert!(g.nodes.iter().all(|n| !n.is_leaf() || n.utils_f.iter().all(|&u| u >= 0.0)));
        assert_eq!(parse_game(&emit_game(&g)).unwrap(), g);
    }

    #[test]
    fn chance_root_gets_a_decision_wrapper() {
        let doc = "game g players=1\nnode c owner=chance infoset=C\nleaf a utils=1\nleaf b utils=0\n\
                   edge c h a prob=1/2\nedge c t b prob=1/2\n";
        let g = parse_game(doc).unwrap();
        assert_eq!(g.nodes[g.root].owner, Owner::Player(0));
        assert!(g.nodes[g.root].dummy);
        assert_eq!(parse_game(&emit_game(&g)).unwrap(), g);
    }
}
