use std::collections::{HashMap, VecDeque};

use crate::corpus::chunk::Chunk;
use crate::corpus::vocab::NUM_RESERVED;
use crate::error::{Error, Result};
use crate::model::params::build_params;
use crate::model::{Mode, ModelConfig};
use crate::rng::Rng;
use crate::tensor::lstm::{lstm_cell, LstmIds};
use crate::tensor::params::ParamSet;
use crate::tensor::scalar::Scalar;
use crate::tensor::tape::{Tape, ValueId};

/// Resolved parameter indices into the `ParamSet`, fixed at construction.
#[derive(Debug, Clone)]
struct ParamIndex {
    type_emb: usize,
    lstm_main: (usize, usize, usize),
    h_init: usize,
    c_init: usize,
    value_emb: Option<usize>,
    out_proj: Option<(usize, usize)>,
    bank_dummy: Option<usize>,
    bank_init_h: Option<usize>,
    bank_init_c: Option<usize>,
    lstm_dyn: Option<(usize, usize, usize)>,
    attn: Option<(usize, usize, usize)>,
    head: (usize, usize),
    switch: Option<(usize, usize)>,
}

impl ParamIndex {
    fn resolve<S: Scalar>(params: &ParamSet<S>) -> Self {
        let find = |name: &str| {
            (0..params.len())
                .find(|&i| params.name(i) == name)
                .unwrap_or_else(|| panic!("missing parameter {name}"))
        };
        let maybe = |name: &str| (0..params.len()).find(|&i| params.name(i) == name);
        ParamIndex {
            type_emb: find("type_emb"),
            lstm_main: (
                find("lstm_main.w_x"),
                find("lstm_main.w_h"),
                find("lstm_main.b"),
            ),
            h_init: find("h_init"),
            c_init: find("c_init"),
            value_emb: maybe("value_emb"),
            out_proj: maybe("out_proj.w").map(|w| (w, find("out_proj.b"))),
            bank_dummy: maybe("bank.dummy"),
            bank_init_h: maybe("bank.init_h"),
            bank_init_c: maybe("bank.init_c"),
            lstm_dyn: maybe("lstm_dyn.w_x").map(|w| (w, find("lstm_dyn.w_h"), find("lstm_dyn.b"))),
            attn: maybe("attn.w1").map(|w1| (w1, find("attn.w2"), find("attn.v"))),
            head: (find("head.w"), find("head.b")),
            switch: maybe("switch.w").map(|w| (w, find("switch.b"))),
        }
    }
}

/// A completion model: configuration plus named parameters.
#[derive(Debug, Clone)]
pub struct Model<S: Scalar> {
    pub config: ModelConfig,
    pub params: ParamSet<S>,
    index: ParamIndex,
}

impl<S: Scalar> Model<S> {
    /// Fresh model with the published initialization rule: uniform over
    /// [-0.05, 0.05] except trainable initial states, which start at zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let params = build_params(&config, &mut rng);
        let index = ParamIndex::resolve(&params);
        Ok(Model {
            config,
            params,
            index,
        })
    }

    pub fn from_parts(config: ModelConfig, params: ParamSet<S>) -> Result<Self> {
        config.validate()?;
        let index = ParamIndex::resolve(&params);
        Ok(Model {
            config,
            params,
            index,
        })
    }

    pub fn convert<T: Scalar>(&self) -> Model<T> {
        Model {
            config: self.config.clone(),
            params: self.params.convert(),
            index: self.index.clone(),
        }
    }

    /// Replaces parameter values (same layout), e.g. after an optimizer step.
    pub fn params_mut(&mut self) -> &mut ParamSet<S> {
        &mut self.params
    }
}

/// Per-placeholder carried slot: still at its initial embedding, or holding
/// updated (h, c) values from earlier chunks.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotCarry<S> {
    Fresh,
    Held(Vec<S>, Vec<S>),
}

/// Everything a program carries across chunk boundaries. All values are
/// detached: gradients never flow into earlier chunks.
#[derive(Debug, Clone)]
pub struct CarriedState<S> {
    /// None until the first chunk ran; the model then binds the trainable
    /// initial state directly.
    main: Option<(Vec<S>, Vec<S>)>,
    /// Last `window` hidden states, oldest first.
    ring: VecDeque<Vec<S>>,
    /// Hidden state per flat position that has children (parent lookups).
    parents: HashMap<usize, Vec<S>>,
    /// One slot per vocabulary value in dynamic modes, empty otherwise.
    slots: Vec<SlotCarry<S>>,
    /// Flat position the next chunk must start at.
    steps_done: usize,
}

impl<S: Scalar> CarriedState<S> {
    pub fn fresh(config: &ModelConfig) -> Self {
        let slots = if config.mode.is_dynamic() {
            vec![SlotCarry::Fresh; config.num_values]
        } else {
            Vec::new()
        };
        CarriedState {
            main: None,
            ring: VecDeque::new(),
            parents: HashMap::new(),
            slots,
            steps_done: 0,
        }
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// Dynamic-bank snapshot for tests and diagnostics: per-slot (h, c)
    /// values, with `None` for slots still at their initial embedding.
    pub fn slot_values(&self) -> Vec<Option<(&[S], &[S])>> {
        self.slots
            .iter()
            .map(|s| match s {
                SlotCarry::Fresh => None,
                SlotCarry::Held(h, c) => Some((h.as_slice(), c.as_slice())),
            })
            .collect()
    }

    /// Owned form of [`slot_values`], for comparing banks across steps.
    pub fn slot_values_owned(&self) -> Vec<Option<(Vec<S>, Vec<S>)>> {
        self.slots
            .iter()
            .map(|s| match s {
                SlotCarry::Fresh => None,
                SlotCarry::Held(h, c) => Some((h.clone(), c.clone())),
            })
            .collect()
    }
}

/// Per-position outputs of a chunk run, as tape handles.
#[derive(Debug, Clone)]
pub struct StepOut {
    /// Logits over the value vocabulary (length num_values).
    pub vocab_logits: ValueId,
    /// Pre-softmax attention scores over the ring buffer (oldest first);
    /// None when attention is off or the history is empty. Reused as
    /// pointer logits.
    pub attn_scores: Option<ValueId>,
    /// Softmax of the scores (attention weights / pointer distribution).
    pub attn_probs: Option<ValueId>,
    /// Pre-sigmoid switcher output; None when the pointer head is off or
    /// the history is empty.
    pub switch_logit: Option<ValueId>,
    /// Ring length when this step was scored (how many pointer slots live).
    pub ring_len: usize,
}

struct Slot {
    h: ValueId,
    c: ValueId,
    touched: bool,
    ever_held: bool,
}

/// One chunk's forward pass: the tape, parameter bindings and per-step
/// outputs. Dropping it drops the graph; call `carried` first to keep the
/// detached state.
pub struct ChunkRun<S: Scalar> {
    pub tape: Tape<S>,
    /// Tape ids aligned with the model's `ParamSet` order.
    pub param_ids: Vec<ValueId>,
    pub steps: Vec<StepOut>,
    num_values: usize,
    window: usize,
    final_h: ValueId,
    final_c: ValueId,
    ring: VecDeque<ValueId>,
    parents_live: HashMap<usize, ValueId>,
    parents_carried: HashMap<usize, Vec<S>>,
    slots: Vec<Slot>,
    steps_done: usize,
}

impl<S: Scalar> ChunkRun<S> {
    /// Detached state for the next chunk of the same program.
    pub fn carried(&self) -> CarriedState<S> {
        let mut parents = self.parents_carried.clone();
        for (&pos, &id) in &self.parents_live {
            parents.insert(pos, self.tape.value(id).to_vec());
        }
        let slots = self
            .slots
            .iter()
            .map(|s| {
                if s.touched || s.ever_held {
                    SlotCarry::Held(
                        self.tape.value(s.h).to_vec(),
                        self.tape.value(s.c).to_vec(),
                    )
                } else {
                    SlotCarry::Fresh
                }
            })
            .collect();
        CarriedState {
            main: Some((
                self.tape.value(self.final_h).to_vec(),
                self.tape.value(self.final_c).to_vec(),
            )),
            ring: self
                .ring
                .iter()
                .map(|&id| self.tape.value(id).to_vec())
                .collect(),
            parents,
            slots,
            steps_done: self.steps_done,
        }
    }

    /// The merged prediction distribution at a local step, as plain values:
    /// `[s*w ; (1-s)*l]` laid out as num_values vocabulary slots followed by
    /// `window` pointer slots (slot o-1 = copy from o positions back).
    /// With no pointer head or empty history this is just softmax(logits).
    pub fn merged_distribution(&self, step: usize) -> Vec<f64> {
        let out = &self.steps[step];
        let logits: Vec<f64> = self
            .tape
            .value(out.vocab_logits)
            .iter()
            .map(|x| x.to_f64())
            .collect();
        let w = softmax_f64(&logits);
        let mut merged = vec![0.0; self.num_values + self.window];
        match (out.attn_probs, out.switch_logit) {
            (Some(probs), Some(u)) => {
                let s = sigmoid_f64(self.tape.scalar_value(u).to_f64());
                for (k, &wk) in w.iter().enumerate() {
                    merged[k] = s * wk;
                }
                let alpha = self.tape.value(probs);
                let m = out.ring_len;
                for (j, a) in alpha.iter().enumerate() {
                    // Chronological index j among m entries = offset m - j.
                    let offset = m - j;
                    merged[self.num_values + offset - 1] = (1.0 - s) * a.to_f64();
                }
            }
            _ => {
                merged[..self.num_values].copy_from_slice(&w);
            }
        }
        merged
    }
}

fn softmax_f64(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Runs one chunk forward, building the tape. `carried` must come from the
/// previous chunk of the same program (or `CarriedState::fresh`).
pub fn run_chunk<S: Scalar>(
    model: &Model<S>,
    chunk: &Chunk,
    carried: &CarriedState<S>,
) -> Result<ChunkRun<S>> {
    let cfg = &model.config;
    let ix = &model.index;
    if carried.steps_done != chunk.start {
        return Err(Error::Config(format!(
            "chunk starts at {} but carried state is at {} (state not initialized for this program?)",
            chunk.start, carried.steps_done
        )));
    }
    for &(t, v) in &chunk.tokens {
        if t as usize >= cfg.num_types || v as usize >= cfg.num_values {
            return Err(Error::Config(format!(
                "token id out of range: type {t} (max {}), value {v} (max {})",
                cfg.num_types - 1,
                cfg.num_values - 1
            )));
        }
    }

    let mut tape: Tape<S> = Tape::new();
    let param_ids = model.params.bind(&mut tape);
    let hid = cfg.hidden_dim;

    let main_ids = LstmIds {
        w_x: param_ids[ix.lstm_main.0],
        w_h: param_ids[ix.lstm_main.1],
        b: param_ids[ix.lstm_main.2],
    };
    let dyn_ids = ix.lstm_dyn.map(|(wx, wh, b)| LstmIds {
        w_x: param_ids[wx],
        w_h: param_ids[wh],
        b: param_ids[b],
    });

    // Main state: trainable initial state on the first chunk, detached
    // constants afterwards.
    let (mut h, mut c) = match &carried.main {
        None => (param_ids[ix.h_init], param_ids[ix.c_init]),
        Some((hv, cv)) => (
            tape.leaf_vec(hv.clone(), false),
            tape.leaf_vec(cv.clone(), false),
        ),
    };

    // Ring buffer; carried entries re-enter as constants, their attention
    // keys recomputed so gradients still reach attn.w1.
    let mut ring: VecDeque<(ValueId, ValueId)> = VecDeque::new();
    if let Some((w1, _, _)) = ix.attn {
        for hv in &carried.ring {
            let leaf = tape.leaf_vec(hv.clone(), false);
            let key = tape.matmul(param_ids[w1], leaf);
            ring.push_back((leaf, key));
        }
    }

    let mut parents_live: HashMap<usize, ValueId> = HashMap::new();
    let mut carried_parent_leaves: HashMap<usize, ValueId> = HashMap::new();

    // Dynamic bank: one slot per vocabulary value. Fresh slots share the
    // initial-embedding parameter; dummies use their static embeddings and
    // are never written.
    let mut slots: Vec<Slot> = Vec::new();
    if cfg.mode.is_dynamic() {
        let init_c = param_ids[ix.bank_init_c.expect("dynamic mode has bank.init_c")];
        let init_h = ix.bank_init_h.expect("dynamic mode has bank.init_h");
        let dummy = ix.bank_dummy.expect("dynamic mode has bank.dummy");
        for v in 0..cfg.num_values {
            if (v as u32) < NUM_RESERVED {
                let hslot = tape.embed_row(param_ids[dummy], v);
                let cslot = tape.zeros_vec(cfg.value_emb_dim);
                slots.push(Slot {
                    h: hslot,
                    c: cslot,
                    touched: false,
                    ever_held: false,
                });
                continue;
            }
            match carried.slots.get(v) {
                Some(SlotCarry::Held(hv, cv)) => {
                    let hslot = tape.leaf_vec(hv.clone(), false);
                    let cslot = tape.leaf_vec(cv.clone(), false);
                    slots.push(Slot {
                        h: hslot,
                        c: cslot,
                        touched: false,
                        ever_held: true,
                    });
                }
                _ => {
                    let hslot = match cfg.mode {
                        Mode::Dynamic => param_ids[init_h],
                        Mode::DynamicFullData => tape.embed_row(param_ids[init_h], v),
                        _ => unreachable!(),
                    };
                    slots.push(Slot {
                        h: hslot,
                        c: init_c,
                        touched: false,
                        ever_held: false,
                    });
                }
            }
        }
    }

    let zero_hidden = tape.zeros_vec(hid);
    let mut steps = Vec::with_capacity(chunk.len());

    for i in 0..chunk.len() {
        let (type_id, value_id) = chunk.tokens[i];
        let pos = chunk.start + i;
        let e_n = tape.embed_row(param_ids[ix.type_emb], type_id as usize);

        // Pre-update value embedding feeds the main LSTM.
        let e_pre = match cfg.mode {
            Mode::NoVars | Mode::Static => {
                tape.embed_row(param_ids[ix.value_emb.unwrap()], value_id as usize)
            }
            Mode::Dynamic | Mode::DynamicFullData => slots[value_id as usize].h,
        };

        let x = tape.concat(&[e_pre, e_n]);
        let (h_new, c_new) = lstm_cell(&mut tape, x, h, c, &main_ids)?;

        // Embedding update reads the pre-step hidden state and writes only
        // the current token's slot; dummy slots stay constant.
        if let Some(dyn_ids) = &dyn_ids {
            if value_id >= NUM_RESERVED {
                let dyn_in = tape.concat(&[h, e_n]);
                let slot = &slots[value_id as usize];
                let (sh, sc) = lstm_cell(&mut tape, dyn_in, slot.h, slot.c, dyn_ids)?;
                let slot = &mut slots[value_id as usize];
                slot.h = sh;
                slot.c = sc;
                slot.touched = true;
            }
        }

        h = h_new;
        c = c_new;
        if chunk.is_parent[i] {
            parents_live.insert(pos, h);
        }

        // Attention over the strictly-previous window; empty history means
        // a zero context by convention.
        let ring_len = ring.len();
        let (context, scores, probs) = match ix.attn {
            Some((_, w2, v_attn)) if ring_len > 0 => {
                let q = tape.matmul(param_ids[w2], h);
                let keys: Vec<ValueId> = ring.iter().map(|&(_, k)| k).collect();
                let sc = tape.attn_scores(&keys, q, param_ids[v_attn]);
                let al = tape.softmax(sc);
                let hs: Vec<ValueId> = ring.iter().map(|&(hh, _)| hh).collect();
                let ctx = tape.weighted_sum(al, &hs);
                (Some(ctx), Some(sc), Some(al))
            }
            Some(_) => (Some(zero_hidden), None, None),
            None => (None, None, None),
        };

        // Head input: hidden state, plus context and the hidden state of
        // the predicted token's parent when attention is on.
        let head_in = if cfg.attention {
            let parent = match chunk.next_parent[i] {
                p if p >= 0 => {
                    let p = p as usize;
                    if let Some(&id) = parents_live.get(&p) {
                        id
                    } else if let Some(&id) = carried_parent_leaves.get(&p) {
                        id
                    } else if let Some(hv) = carried.parents.get(&p) {
                        let leaf = tape.leaf_vec(hv.clone(), false);
                        carried_parent_leaves.insert(p, leaf);
                        leaf
                    } else {
                        zero_hidden
                    }
                }
                _ => zero_hidden,
            };
            tape.concat(&[h, context.unwrap(), parent])
        } else {
            h
        };
        let lin = tape.matmul(param_ids[ix.head.0], head_in);
        let lin_b = tape.add(lin, param_ids[ix.head.1]);
        let h_hat = tape.tanh(lin_b);

        // Logits: tied to the post-update bank in dynamic modes, an output
        // projection otherwise.
        let vocab_logits = match cfg.mode {
            Mode::Dynamic | Mode::DynamicFullData => {
                let rows: Vec<ValueId> = slots.iter().map(|s| s.h).collect();
                tape.dot_stack(&rows, h_hat)
            }
            Mode::NoVars | Mode::Static => {
                let (w, b) = ix.out_proj.unwrap();
                let y = tape.matmul(param_ids[w], h_hat);
                tape.add(y, param_ids[b])
            }
        };

        let switch_logit = match ix.switch {
            Some((w, b)) if scores.is_some() => {
                let u = tape.dot(param_ids[w], h_hat);
                Some(tape.add(u, param_ids[b]))
            }
            _ => None,
        };

        // The just-computed hidden state becomes attendable for the next
        // position.
        if let Some((w1, _, _)) = ix.attn {
            let key = tape.matmul(param_ids[w1], h);
            ring.push_back((h, key));
            if ring.len() > cfg.window {
                ring.pop_front();
            }
        }

        steps.push(StepOut {
            vocab_logits,
            attn_scores: scores,
            attn_probs: probs,
            switch_logit,
            ring_len,
        });
    }

    Ok(ChunkRun {
        tape,
        param_ids,
        steps,
        num_values: cfg.num_values,
        window: cfg.window,
        final_h: h,
        final_c: c,
        ring: ring.iter().map(|&(hh, _)| hh).collect(),
        parents_live,
        parents_carried: carried.parents.clone(),
        slots,
        steps_done: chunk.start + chunk.len(),
    })
}

/// Top-1 prediction from a merged distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    /// A vocabulary value id.
    Vocab(u32),
    /// Copy the value `offset` positions back (1 = previous token).
    Copy { offset: u32 },
}

/// Argmax over the merged distribution; ties break toward the lowest index,
/// so the vocabulary segment wins over the pointer segment.
pub fn predict_next(merged: &[f64], num_values: usize) -> (Prediction, f64) {
    let mut best = 0usize;
    let mut best_p = merged[0];
    for (k, &p) in merged.iter().enumerate().skip(1) {
        if p > best_p {
            best = k;
            best_p = p;
        }
    }
    let pred = if best < num_values {
        Prediction::Vocab(best as u32)
    } else {
        Prediction::Copy {
            offset: (best - num_values + 1) as u32,
        }
    };
    (pred, best_p)
}
