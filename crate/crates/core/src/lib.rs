//! Upper bounds on conditional task complexity.
//!
//! A task is adapted by short replayable programs (compressed prompts,
//! compressed training data, quantized adapters, weight snapshots). Each
//! program's length in bits and its measured score form a point; the
//! Pareto frontier of those points bounds the complexity of reaching a
//! score given the model.

pub mod codec;
pub mod error;
pub mod frontier;
pub mod harness;
pub mod programs;
pub mod tasks;
pub mod toymodel;
pub mod wire;

pub use error::{Error, Result};

/// Index into a [`toymodel::Vocab`].
pub type Token = u16;
