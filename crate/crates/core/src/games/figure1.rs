//! The two-subtree example game with its merge arrows.

use num::BigInt;

use crate::crswf::AbstractionMap;
use crate::efg::{GameBuilder, GameTree, Rational};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Player 1's payoff at the leaves of one P1 node, for actions (first, second).
type Pays = (i64, i64);

struct Side {
    tag: &'static str,
    /// Nature split under the first and the second P2 action.
    split: [(Rational, Rational); 2],
    /// Leaf payoffs for the four P1 nodes, left to right.
    pays: [Pays; 4],
}

/// The example game: a uniform chance root over two player-2 subtrees.
///
/// Player 1's payoff is the number shown at each leaf and player 2 gets 10
/// minus it. Player 2 chooses `a`/`b`, nature splits, and player 1 chooses
/// `l`/`r` below `a` and `L`/`R` below `b`; each pair of player-1 nodes
/// under one nature node forms an information set. The returned map merges
/// the two player-2 nodes and the corresponding player-1 sets of the two
/// subtrees.
pub fn make_figure1_game() -> (GameTree, AbstractionMap) {
    let sides = [
        Side {
            tag: "x",
            split: [(q(1, 2), q(1, 2)), (q(1, 2), q(1, 2))],
            pays: [(10, 0), (0, 10), (10, 0), (0, 9)],
        },
        Side {
            tag: "y",
            split: [(q(2, 5), q(3, 5)), (q(1, 2), q(1, 2))],
            pays: [(10, 0), (0, 10), (10, 0), (0, 10)],
        },
    ];
    let mut b = GameBuilder::new("figure1", 2);
    b.chance("root", "root").unwrap();
    for side in &sides {
        let t = side.tag;
        let p2 = format!("p2{t}");
        b.decision(&p2, 1, &format!("P2{t}")).unwrap();
        b.edge("root", t, &p2, Some(q(1, 2)));
        for (k, (act, labels)) in [("a", ["l", "r"]), ("b", ["L", "R"])].into_iter().enumerate() {
            let nat = format!("{p2}{act}");
            b.chance(&nat, &nat).unwrap();
            b.edge(&p2, act, &nat, None);
            let set = format!("P1{t}{act}");
            for (j, (branch, prob)) in [("h", &side.split[k].0), ("t", &side.split[k].1)].into_iter().enumerate() {
                let p1 = format!("{nat}{branch}");
                b.decision(&p1, 0, &set).unwrap();
                b.edge(&nat, branch, &p1, Some(prob.clone()));
                let (u_first, u_second) = side.pays[2 * k + j];
                for (label, u) in labels.into_iter().zip([u_first, u_second]) {
                    let leaf = format!("{p1}{label}");
                    b.leaf(&leaf, vec![Rational::from_integer(u.into()), Rational::from_integer((10 - u).into())])
                        .unwrap();
                    b.edge(&p1, label, &leaf, None);
                }
            }
        }
    }
    let game = b.build().expect("example game is well formed");
    let idx = |id: &str| game.infoset_by_id(id).unwrap();
    let pairs = [("P2", "P2x", "P2y"), ("P1a", "P1xa", "P1ya"), ("P1b", "P1xb", "P1yb")];
    let mut map = AbstractionMap::from_classes(
        &game,
        pairs
            .iter()
            .map(|(name, a, b)| (name.to_string(), vec![idx(a), idx(b)]))
            .collect(),
    )
    .expect("example merges are a partition");
    // The figure's numbers are stated for unscaled utilities.
    for (_, a, b) in pairs {
        map.set_delta(&game, idx(a), idx(b), Rational::from_integer(1.into()))
            .expect("merged pair");
    }
    (game, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::Owner;

    #[test]
    fn shape_matches_the_figure() {
        let (g, map) = make_figure1_game();
        let real = |o: Owner| g.nodes.iter().filter(|n| !n.dummy && n.owner == o).count();
        assert_eq!(real(Owner::Player(1)), 2);
        assert_eq!(real(Owner::Player(0)), 8);
        assert_eq!(real(Owner::Leaf), 16);
        let merged: Vec<_> = map.classes().iter().filter(|c| c.len() > 1).collect();
        assert_eq!(merged.len(), 3);
        assert!(merged.iter().all(|c| c.len() == 2));
    }
}
