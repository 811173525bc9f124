use num::{Signed, ToPrimitive, Zero};

use super::LeafBijection;
use crate::efg::{GameTree, Rational};

/// Result of minimizing max_k |a_k − δ·b_k| over δ > 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaChoice {
    pub delta: Rational,
    /// The minimized maximum error.
    pub error: f64,
    /// No positive minimizer exists; `delta` is then 1.
    pub undefined: bool,
}

fn exact_error(pairs: &[(Rational, Rational)], d: &Rational) -> Rational {
    pairs
        .iter()
        .map(|(a, b)| (a - d * b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn unit_choice(pairs: &[(Rational, Rational)], undefined: bool) -> DeltaChoice {
    let one = Rational::from_integer(1.into());
    DeltaChoice {
        error: to_f64(&exact_error(pairs, &one)),
        delta: one,
        undefined,
    }
}

/// Exact minimizer of the convex piecewise-linear f(δ) = max_k |a_k − δ·b_k|
/// for non-negative a, b; ties go to the smallest δ.
///
/// f = max(U, L) with U(δ) = max_k (a_k − δ b_k) nonincreasing and
/// L(δ) = max_k (δ b_k − a_k) nondecreasing, so the minimum sits where they
/// cross, at δ = (a_j + a_k)/(b_j + b_k) for the pieces active there. The
/// crossing is located in floating point and then settled exactly.
pub fn minimize_scaled_error(pairs: &[(Rational, Rational)]) -> DeltaChoice {
    let mut pairs = pairs.to_vec();
    pairs.sort();
    pairs.dedup();
    let any_a = pairs.iter().any(|(a, _)| a.is_positive());
    let any_b = pairs.iter().any(|(_, b)| b.is_positive());
    if !any_b {
        return unit_choice(&pairs, any_a);
    }
    if !any_a {
        return unit_choice(&pairs, true);
    }
    let fl: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (to_f64(a), to_f64(b))).collect();
    let upper = |d: f64| fl.iter().map(|(a, b)| a - d * b).fold(f64::MIN, f64::max);
    let lower = |d: f64| fl.iter().map(|(a, b)| d * b - a).fold(f64::MIN, f64::max);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while upper(hi) > lower(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if upper(mid) > lower(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let dc = 0.5 * (lo + hi);
    let (u, l) = (upper(dc), lower(dc));
    let tol = 1e-9 * (1.0 + u.abs().max(l.abs()));
    let near = |vals: Vec<f64>, top: f64| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] >= top - tol).collect();
        idx.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
        idx.truncate(16);
        idx
    };
    let ju = near(fl.iter().map(|(a, b)| a - dc * b).collect(), u);
    let kl = near(fl.iter().map(|(a, b)| dc * b - a).collect(), l);
    let mut best: Option<(Rational, Rational)> = None;
    for &j in &ju {
        for &k in &kl {
            let den = &pairs[j].1 + &pairs[k].1;
            if !den.is_positive() {
                continue;
            }
            let d = (&pairs[j].0 + &pairs[k].0) / den;
            if !d.is_positive() {
                continue;
            }
            let e = exact_error(&pairs, &d);
            let better = match &best {
                None => true,
                Some((bd, be)) => e < *be || (e == *be && d < *bd),
            };
            if better {
                best = Some((d, e));
            }
        }
    }
    let (mut d, e) = match best {
        Some(x) => x,
        None => return unit_choice(&pairs, true),
    };
    // Smallest δ keeping U ≤ e; L only shrinks when moving left.
    let floor = pairs
        .iter()
        .filter(|(_, b)| b.is_positive())
        .map(|(a, b)| (a - &e) / b)
        .max()
        .unwrap();
    if floor.is_positive() && floor < d {
        d = floor;
    }
    DeltaChoice {
        error: to_f64(&e),
        delta: d,
        undefined: false,
    }
}

/// The δ minimizing the largest leaf reward error of a pair.
pub fn choose_delta(game: &GameTree, phi: &LeafBijection) -> DeltaChoice {
    let pairs: Vec<(Rational, Rational)> = phi
        .leaves
        .iter()
        .flat_map(|&(z, w)| {
            game.nodes[z]
                .utils
                .iter()
                .cloned()
                .zip(game.nodes[w].utils.iter().cloned())
        })
        .collect();
    minimize_scaled_error(&pairs)
}
