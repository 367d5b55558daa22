use crate::model::{Mode, ModelConfig};
use crate::rng::Rng;
use crate::tensor::params::{ParamSet, Tensor};
use crate::tensor::scalar::Scalar;

use crate::corpus::vocab::NUM_RESERVED;

/// Initialization rule per tensor: uniform over [-0.05, 0.05] for ordinary
/// weights, zeros for trainable initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamInit {
    Uniform,
    Zeros,
}

/// The named-tensor layout of a model, in checkpoint order. Single source
/// of truth for both allocation and parameter accounting.
pub fn param_spec(cfg: &ModelConfig) -> Vec<(String, usize, usize, ParamInit)> {
    let h = cfg.hidden_dim;
    let e = cfg.value_emb_dim;
    let te = cfg.type_emb_dim;
    let mut spec: Vec<(String, usize, usize, ParamInit)> = Vec::new();
    let mut p = |name: &str, rows: usize, cols: usize, init: ParamInit| {
        spec.push((name.to_string(), rows, cols, init));
    };

    p("type_emb", cfg.num_types, te, ParamInit::Uniform);

    // Main recurrence over concat(value embedding, type embedding).
    p("lstm_main.w_x", 4 * h, e + te, ParamInit::Uniform);
    p("lstm_main.w_h", 4 * h, h, ParamInit::Uniform);
    p("lstm_main.b", 4 * h, 1, ParamInit::Uniform);
    p("h_init", h, 1, ParamInit::Zeros);
    p("c_init", h, 1, ParamInit::Zeros);

    match cfg.mode {
        Mode::NoVars | Mode::Static => {
            p("value_emb", cfg.num_values, e, ParamInit::Uniform);
            p("out_proj.w", cfg.num_values, e, ParamInit::Uniform);
            p("out_proj.b", cfg.num_values, 1, ParamInit::Uniform);
        }
        Mode::Dynamic | Mode::DynamicFullData => {
            // Dummies never change role; they keep constant embeddings.
            p("bank.dummy", NUM_RESERVED as usize, e, ParamInit::Uniform);
            if cfg.mode == Mode::Dynamic {
                p("bank.init_h", e, 1, ParamInit::Zeros);
            } else {
                // One trainable initial embedding per vocabulary value.
                p("bank.init_h", cfg.num_values, e, ParamInit::Zeros);
            }
            p("bank.init_c", e, 1, ParamInit::Zeros);
            // Embedding recurrence over concat(previous hidden, type emb).
            p("lstm_dyn.w_x", 4 * e, h + te, ParamInit::Uniform);
            p("lstm_dyn.w_h", 4 * e, e, ParamInit::Uniform);
            p("lstm_dyn.b", 4 * e, 1, ParamInit::Uniform);
        }
    }

    if cfg.attention {
        p("attn.w1", h, h, ParamInit::Uniform);
        p("attn.w2", h, h, ParamInit::Uniform);
        p("attn.v", h, 1, ParamInit::Uniform);
    }

    // Prediction head maps [h; context; parent] to the embedding space.
    p("head.w", e, cfg.head_input_dim(), ParamInit::Uniform);
    p("head.b", e, 1, ParamInit::Uniform);

    if cfg.pointer {
        p("switch.w", e, 1, ParamInit::Uniform);
        p("switch.b", 1, 1, ParamInit::Uniform);
    }

    spec
}

/// Allocates and initializes all parameters for a configuration.
pub fn build_params<S: Scalar>(cfg: &ModelConfig, rng: &mut Rng) -> ParamSet<S> {
    let mut params = ParamSet::new();
    for (name, rows, cols, init) in param_spec(cfg) {
        let tensor = match init {
            ParamInit::Uniform => Tensor::uniform(rows, cols, -0.05, 0.05, rng),
            ParamInit::Zeros => Tensor::zeros(rows, cols),
        };
        params.push(name, tensor);
    }
    params
}

/// Per-tensor and total trainable-parameter counts.
pub fn count_params(cfg: &ModelConfig) -> (Vec<(String, usize)>, usize) {
    let rows: Vec<(String, usize)> = param_spec(cfg)
        .into_iter()
        .map(|(name, r, c, _)| (name, r * c))
        .collect();
    let total = rows.iter().map(|(_, n)| n).sum();
    (rows, total)
}
