//! Code completion over flattened ASTs with anonymized variables.
//!
//! Programs are depth-first token streams of (node type, node value) pairs.
//! Variable names can be kept (full data), replaced with per-program random
//! placeholders `var1..varK`, or stripped entirely. The completion model is
//! an attentional LSTM with a pointer/switcher head and one of three value
//! embedding regimes; the dynamic regime gives every placeholder a
//! per-program embedding that starts from a shared constant and is updated
//! by a second LSTM each time the placeholder occurs, which makes the model
//! invariant to renaming.
//!
//! Start with the runnable examples:
//!
//! ```text
//! examples/
//!   end_to_end.rs            generate -> preprocess -> anonymize -> train -> eval
//!   dynamic_embeddings.rs    placeholder slots: shared init, isolated updates
//!   permutation_invariance.rs  relabeling placeholders permutes the outputs
//!   pointer_copying.rs       copying out-of-vocabulary values from the window
//!   loss_strategies.rs       pointer/vocabulary loss combination variants
//!   gradient_check.rs        finite-difference verification of the full model
//!   ensemble.rs              max-probability merge of two models
//!   param_report.rs          trainable-parameter accounting per mode
//!   complete.rs              greedy continuation of a program prefix
//! ```
//!
//! Run one with `cargo run --release -p anoncomplete --example end_to_end`.
//! The same capabilities are scriptable through the thin `anoncomplete`
//! binary (see `--help`).

pub mod anonymize;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
