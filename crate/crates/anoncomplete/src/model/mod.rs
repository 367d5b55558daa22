//! The completion models: attentional LSTM with parent connection, a
//! pointer/switcher head, and four value-embedding regimes.
//!
//! `no_vars` sees only dummy values, `static` uses a conventional lookup
//! table, `dynamic` gives each placeholder a per-program embedding updated
//! by a dedicated LSTM (and is therefore invariant to relabeling), and
//! `dynamic_full_data` additionally trains a per-value initial embedding.

pub mod checkpoint;
pub mod net;
pub mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use net::{predict_next, run_chunk, CarriedState, ChunkRun, Model, Prediction, StepOut};
pub use params::{build_params, param_spec, ParamInit};

use crate::error::{Error, Result};

/// Value-embedding regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NoVars,
    Static,
    Dynamic,
    DynamicFullData,
}

impl Mode {
    pub fn is_dynamic(self) -> bool {
        matches!(self, Mode::Dynamic | Mode::DynamicFullData)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoVars => "no_vars",
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
            Mode::DynamicFullData => "dynamic_full_data",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "no_vars" => Ok(Mode::NoVars),
            "static" => Ok(Mode::Static),
            "dynamic" => Ok(Mode::Dynamic),
            "dynamic_full_data" => Ok(Mode::DynamicFullData),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected no_vars|static|dynamic|dynamic_full_data)"
            ))),
        }
    }

    pub fn tag(self) -> u32 {
        match self {
            Mode::NoVars => 0,
            Mode::Static => 1,
            Mode::Dynamic => 2,
            Mode::DynamicFullData => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Mode> {
        match tag {
            0 => Ok(Mode::NoVars),
            1 => Ok(Mode::Static),
            2 => Ok(Mode::Dynamic),
            3 => Ok(Mode::DynamicFullData),
            other => Err(Error::Config(format!("unknown mode tag {other}"))),
        }
    }
}

/// Architecture dimensions and feature switches.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub mode: Mode,
    pub type_emb_dim: usize,
    pub value_emb_dim: usize,
    pub hidden_dim: usize,
    /// Chunk length, attention span and pointer reach, all one number.
    pub window: usize,
    /// Type vocabulary size including the reserved dummies.
    pub num_types: usize,
    /// Value vocabulary size including the reserved dummies (K + 3 in the
    /// anonymized setting).
    pub num_values: usize,
    pub attention: bool,
    pub pointer: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pointer && !self.attention {
            return Err(Error::Config(
                "pointer requires attention (scores are reused as copy logits)".into(),
            ));
        }
        if self.window < 1 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        for (name, v) in [
            ("type_emb_dim", self.type_emb_dim),
            ("value_emb_dim", self.value_emb_dim),
            ("hidden_dim", self.hidden_dim),
            ("num_types", self.num_types),
            ("num_values", self.num_values),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Input width of the prediction head: hidden state, plus attention
    /// context and parent hidden when attention is enabled.
    pub fn head_input_dim(&self) -> usize {
        if self.attention {
            3 * self.hidden_dim
        } else {
            self.hidden_dim
        }
    }
}
