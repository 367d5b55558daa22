//! Minimal dense-tensor numerics with reverse-mode differentiation.
//!
//! Enough for LSTMs, additive attention, pointer heads and the dynamic
//! embedding recurrence: a flat arena [`Tape`] records forward operations
//! and replays them backward. Training runs in f32; gradient verification
//! in f64 (see [`gradcheck`]). Gradients never cross chunk boundaries --
//! carried state re-enters the next tape as constant leaves.

pub mod gradcheck;
pub mod lstm;
pub mod params;
pub mod scalar;
pub mod tape;

pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{lstm_cell, LstmIds};
pub use params::{ParamSet, Tensor};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, ValueId};
