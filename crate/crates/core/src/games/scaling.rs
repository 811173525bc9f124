//! Three information sets whose payoffs are scaled copies up to one leaf.

use crate::efg::{GameBuilder, GameTree, Rational};

/// A uniform chance root over three branches; in branch j nature reaches
/// the two nodes of set `I{j}` with probabilities 9/10 and 1/10, and each
/// node has one action to a leaf paying player 1 the listed amount.
pub fn make_scaling_game(payoffs: [[i64; 2]; 3]) -> GameTree {
    let mut b = GameBuilder::new("scaling", 2);
    b.chance("root", "root").unwrap();
    let third = Rational::new(1.into(), 3.into());
    for (j, pays) in payoffs.iter().enumerate() {
        let nat = format!("n{}", j + 1);
        b.chance(&nat, &nat).unwrap();
        b.edge("root", &format!("b{}", j + 1), &nat, Some(third.clone()));
        for ((branch, p), u) in [("hi", 9), ("lo", 1)].into_iter().zip(pays) {
            let s = format!("{nat}{branch}");
            b.decision(&s, 0, &format!("I{}", j + 1)).unwrap();
            b.edge(&nat, branch, &s, Some(Rational::new(p.into(), 10.into())));
            let z = format!("{s}z");
            b.leaf(&z, vec![Rational::from_integer((*u).into()), Rational::from_integer(0.into())]).unwrap();
            b.edge(&s, "go", &z, None);
        }
    }
    b.build().expect("scaling game is well formed")
}

/// The instance I₁={1,2}, I₂={5,11}, I₃={10,23}.
pub fn make_scaling_counterexample() -> GameTree {
    make_scaling_game([[1, 2], [5, 11], [10, 23]])
}
