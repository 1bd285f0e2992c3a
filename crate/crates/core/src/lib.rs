//! Bridge-deck crack survey: a grid-world simulator with traffic and
//! procedurally generated cracks, two vision crack detectors, and a PPO agent
//! that learns to survey the deck.

// `!(x > 0.0)` in validation code also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod env;
pub mod error;
pub mod harness;
pub mod io;
pub mod nn;
pub mod ppo;
pub mod render;
pub mod rng;

pub use error::{Error, Result};
