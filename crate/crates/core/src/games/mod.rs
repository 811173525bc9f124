//! Benchmark game generators.

mod drp;
mod figure1;
mod random;
mod scaling;

pub use drp::{make_cdrp, make_drp, DrpError, DrpSpec, ANTE, MAX_RAISES, RAISE_SIZES};
pub use figure1::make_figure1_game;
pub use random::{make_random_game, RandomGame, RandomGameSpec};
pub use scaling::{make_scaling_counterexample, make_scaling_game};
