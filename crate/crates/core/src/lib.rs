//! Chance-relaxed skew well-formed (CRSWF) abstractions of extensive-form
//! games: verification, solution-quality bounds, abstraction building and
//! a counterfactual regret minimization solver.

pub mod abstraction;
pub mod bounds;
pub mod cfr;
pub mod crswf;
pub mod efg;
pub mod experiment;
pub mod games;
