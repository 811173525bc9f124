//! CRSWF abstractions: the abstraction map, leaf bijections, the error
//! terms and the verification procedure.

mod bijection;
mod delta;
mod errors;
mod map;
mod verify;

use thiserror::Error;

pub use bijection::{find_leaf_bijection, match_tables, LeafBijection, LeafKey, LeafTable};
pub use delta::{choose_delta, minimize_scaled_error, DeltaChoice};
pub use errors::{aggregate_errors, compute_leaf_errors, LeafErrors, NodeErrors, PairErrors};
pub use map::{AbstractionMap, MapError};
pub use verify::{check_refinement, verify_crswf, verify_crswf_with, DeltaPolicy, ErrorReport};

#[derive(Debug, Error, PartialEq)]
pub enum CrswfError {
    #[error("the original game has no perfect recall for player {}", .0 + 1)]
    NoPerfectRecall(usize),
    #[error("{first} and {second} differ in owner or action labels")]
    NotMergeable { first: String, second: String },
    #[error("{first} and {second} have {} and {} leaves below them", .counts.0, .counts.1)]
    LeafCount {
        first: String,
        second: String,
        counts: (usize, usize),
    },
    #[error("condition {condition} fails for ({first}, {second}) at leaf {leaf}")]
    Condition {
        condition: u8,
        first: String,
        second: String,
        leaf: String,
    },
    #[error("leaf pairing of ({first}, {second}) does not induce a node bijection at {node}")]
    NodeMapping { first: String, second: String, node: String },
}
