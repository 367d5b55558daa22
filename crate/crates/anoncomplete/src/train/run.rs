use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::anonymize::anonymize_program;
use crate::corpus::{chunk, Chunk, Corpus, View};
use crate::error::{Error, Result};
use crate::eval::evaluate_programs;
use crate::model::{run_chunk, CarriedState, Mode, Model, ModelConfig};
use crate::rng::Rng;
use crate::tensor::scalar::Scalar;
use crate::train::adamw::{epoch_lr, AdamW};
use crate::train::loss::{position_loss, Strategy};

/// Everything the trainer needs beyond the corpus itself.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mode: Mode,
    pub type_emb_dim: usize,
    pub value_emb_dim: usize,
    pub hidden_dim: usize,
    pub window: usize,
    pub attention: bool,
    pub pointer: bool,
    pub strategy: Strategy,
    pub lr: f64,
    pub decay: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub holdout_fraction: f64,
    pub workers: usize,
    pub reanonymize_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Dynamic,
            type_emb_dim: 24,
            value_emb_dim: 48,
            hidden_dim: 96,
            window: 50,
            attention: true,
            pointer: true,
            strategy: Strategy::Standard,
            lr: 0.001,
            decay: 0.6,
            weight_decay: 0.01,
            epochs: 10,
            batch_size: 128,
            seed: 1,
            clip_norm: 5.0,
            holdout_fraction: 0.1,
            workers: 1,
            reanonymize_each_epoch: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub counted_positions: usize,
    pub holdout_accuracy: Option<f64>,
    pub seconds: f64,
}

pub struct TrainOutcome<S: Scalar> {
    pub model: Model<S>,
    pub epochs: Vec<EpochSummary>,
    /// Mean per-position loss of every optimizer step, per epoch.
    pub step_losses: Vec<Vec<f64>>,
    pub holdout_indices: Vec<usize>,
}

/// Train/holdout split: the last `fraction` of programs is held out.
pub fn holdout_split(n: usize, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let h = ((n as f64) * fraction).round() as usize;
    let h = h.min(n.saturating_sub(1));
    let cut = n - h;
    ((0..cut).collect(), (cut..n).collect())
}

fn model_config(corpus: &Corpus, cfg: &TrainConfig) -> ModelConfig {
    ModelConfig {
        mode: cfg.mode,
        type_emb_dim: cfg.type_emb_dim,
        value_emb_dim: cfg.value_emb_dim,
        hidden_dim: cfg.hidden_dim,
        window: cfg.window,
        num_types: corpus.vocab.types.len(),
        num_values: corpus.vocab.num_values(),
        attention: cfg.attention,
        pointer: cfg.pointer,
    }
}

struct ItemResult<S> {
    grads: Vec<Vec<S>>,
    loss_sum: f64,
    counted: usize,
    carried: CarriedState<S>,
}

fn process_item<S: Scalar>(
    model: &Model<S>,
    ch: &Chunk,
    carried: &CarriedState<S>,
    strategy: Strategy,
    rng: &mut Rng,
) -> Result<ItemResult<S>> {
    let mut run = run_chunk(model, ch, carried)?;
    let mut losses = Vec::new();
    for (i, target) in ch.targets.iter().enumerate() {
        let step = run.steps[i].clone();
        if let Some(l) = position_loss(&mut run.tape, &step, *target, strategy, rng) {
            losses.push(l);
        }
    }
    let counted = losses.len();
    let mut grads = vec![Vec::new(); model.params.len()];
    let mut loss_sum = 0.0;
    if counted > 0 {
        let total = run.tape.sum_list(&losses);
        loss_sum = run.tape.scalar_value(total).to_f64();
        if !loss_sum.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss became non-finite at flat position {} (param norm {:.3e})",
                ch.start,
                model.params.global_norm()
            )));
        }
        let mut g = run.tape.backward(total);
        for (i, id) in run.param_ids.iter().enumerate() {
            if let Some(v) = g.take(*id) {
                grads[i] = v;
            }
        }
    }
    Ok(ItemResult {
        grads,
        loss_sum,
        counted,
        carried: run.carried(),
    })
}

/// Deterministic per-item generator for the random loss strategy and any
/// other per-item randomness.
fn item_rng(seed: u64, epoch: usize, program: usize, chunk_idx: usize) -> Rng {
    Rng::new(seed)
        .substream(0x9e1 ^ epoch as u64)
        .substream(0x51d ^ program as u64)
        .substream(0xc4 ^ chunk_idx as u64)
}

/// Trains a model on the corpus. Batches are groups of programs with equal
/// chunk counts advancing one chunk per step in lockstep, with per-program
/// carried state; gradients are averaged over counted positions, clipped by
/// global norm, and applied with AdamW on the published schedule.
///
/// `on_epoch` runs after every epoch (checkpointing lives there).
pub fn train<S: Scalar>(
    corpus: &Corpus,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&Model<S>, &EpochSummary) -> Result<()>,
) -> Result<TrainOutcome<S>> {
    if corpus.programs.is_empty() {
        return Err(Error::Config("cannot train on an empty corpus".into()));
    }
    if cfg.batch_size < 1 || cfg.epochs < 1 {
        return Err(Error::Config("batch_size and epochs must be >= 1".into()));
    }
    if cfg.reanonymize_each_epoch && !matches!(corpus.view, View::Anonymized { .. }) {
        return Err(Error::Config(
            "reanonymize_each_epoch requires an anonymized corpus".into(),
        ));
    }
    let mcfg = model_config(corpus, cfg);
    let mut model: Model<S> = Model::new(mcfg, cfg.seed)?;
    let mut opt: AdamW<S> = AdamW::new(&model.params, cfg.weight_decay);
    let (train_ix, holdout_ix) = holdout_split(corpus.programs.len(), cfg.holdout_fraction);

    let base_chunks: Vec<Vec<Chunk>> = corpus
        .programs
        .iter()
        .map(|p| chunk(p, cfg.window))
        .collect();

    let root_rng = Rng::new(cfg.seed);
    let mut epochs = Vec::new();
    let mut step_losses_all = Vec::new();

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let lr = epoch_lr(cfg.lr, cfg.decay, epoch);
        let mut order = train_ix.clone();
        root_rng.substream(1000 + epoch as u64).shuffle(&mut order);

        // Optional per-epoch re-anonymization: fresh placeholder draws for
        // every program after the first epoch.
        let epoch_chunks: Option<Vec<Vec<Chunk>>> = if cfg.reanonymize_each_epoch && epoch > 0 {
            let k = match corpus.view {
                View::Anonymized { k, .. } => k as usize,
                _ => unreachable!(),
            };
            let mut rebuilt: Vec<Vec<Chunk>> = vec![Vec::new(); corpus.programs.len()];
            for &p in &order {
                let mut prog = corpus.programs[p].clone();
                let mut rng = root_rng
                    .substream(7000 + epoch as u64)
                    .substream(p as u64);
                anonymize_program(&mut prog, k, &mut rng, None, None)?;
                rebuilt[p] = chunk(&prog, cfg.window);
            }
            Some(rebuilt)
        } else {
            None
        };
        let chunk_source: &[Vec<Chunk>] = epoch_chunks.as_deref().unwrap_or(&base_chunks);

        // Bucket by chunk count, then cut into batch jobs.
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &p in &order {
            buckets.entry(chunk_source[p].len()).or_default().push(p);
        }
        let mut jobs: Vec<(usize, Vec<usize>)> = Vec::new();
        for (count, progs) in buckets {
            for group in progs.chunks(cfg.batch_size) {
                jobs.push((count, group.to_vec()));
            }
        }
        root_rng.substream(2000 + epoch as u64).shuffle(&mut jobs);

        let mut epoch_loss = 0.0;
        let mut epoch_counted = 0usize;
        let mut step_losses = Vec::new();

        for (batch_idx, (chunk_count, progs)) in jobs.iter().enumerate() {
            let mut states: Vec<CarriedState<S>> = progs
                .iter()
                .map(|_| CarriedState::fresh(&model.config))
                .collect();
            for k in 0..*chunk_count {
                let items: Vec<(usize, &Chunk, &CarriedState<S>)> = progs
                    .iter()
                    .enumerate()
                    .map(|(item, &p)| (p, &chunk_source[p][k], &states[item]))
                    .collect();
                let results = run_batch(&model, &items, k, cfg, epoch).map_err(|e| match e {
                    Error::NonFinite(msg) => Error::NonFinite(format!(
                        "epoch {epoch}, batch {batch_idx}, chunk {k}: {msg}"
                    )),
                    other => other,
                })?;

                let mut grads: Vec<Vec<S>> = vec![Vec::new(); model.params.len()];
                let mut loss_sum = 0.0;
                let mut counted = 0usize;
                for (item, r) in results.into_iter().enumerate() {
                    loss_sum += r.loss_sum;
                    counted += r.counted;
                    states[item] = r.carried;
                    for (gi, g) in r.grads.into_iter().enumerate() {
                        if g.is_empty() {
                            continue;
                        }
                        if grads[gi].is_empty() {
                            grads[gi] = g;
                        } else {
                            for (a, b) in grads[gi].iter_mut().zip(&g) {
                                *a += *b;
                            }
                        }
                    }
                }

                // Mean over counted positions, then clip and step.
                let scale = S::from_f64(1.0 / counted.max(1) as f64);
                for g in grads.iter_mut() {
                    for x in g.iter_mut() {
                        *x = *x * scale;
                    }
                }
                AdamW::<S>::clip_global_norm(&mut grads, cfg.clip_norm);
                opt.step(&mut model.params, &grads, lr);

                epoch_loss += loss_sum;
                epoch_counted += counted;
                step_losses.push(loss_sum / counted.max(1) as f64);
            }
        }

        let holdout_accuracy = if holdout_ix.is_empty() {
            None
        } else {
            Some(evaluate_programs(&model, corpus, Some(&holdout_ix))?.accuracy)
        };
        let summary = EpochSummary {
            epoch,
            lr,
            train_loss: epoch_loss / epoch_counted.max(1) as f64,
            counted_positions: epoch_counted,
            holdout_accuracy,
            seconds: t0.elapsed().as_secs_f64(),
        };
        on_epoch(&model, &summary)?;
        epochs.push(summary);
        step_losses_all.push(step_losses);
    }

    Ok(TrainOutcome {
        model,
        epochs,
        step_losses: step_losses_all,
        holdout_indices: holdout_ix,
    })
}

/// Forward/backward for one chunk index of a batch, optionally fanned out
/// over worker threads. Results come back in item order, so gradient
/// summation is bit-identical regardless of the worker count.
fn run_batch<S: Scalar>(
    model: &Model<S>,
    items: &[(usize, &Chunk, &CarriedState<S>)],
    chunk_idx: usize,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<Vec<ItemResult<S>>> {
    if cfg.workers <= 1 || items.len() == 1 {
        return items
            .iter()
            .map(|&(p, ch, st)| {
                let mut rng = item_rng(cfg.seed, epoch, p, chunk_idx);
                process_item(model, ch, st, cfg.strategy, &mut rng)
            })
            .collect();
    }

    let workers = cfg.workers.min(items.len());
    let per = items.len().div_ceil(workers);
    let slices: Vec<&[(usize, &Chunk, &CarriedState<S>)]> = items.chunks(per).collect();
    let mut out: Vec<Vec<Result<ItemResult<S>>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = slices
            .iter()
            .map(|slice| {
                scope.spawn(move || {
                    slice
                        .iter()
                        .map(|&(p, ch, st)| {
                            let mut rng = item_rng(cfg.seed, epoch, p, chunk_idx);
                            process_item(model, ch, st, cfg.strategy, &mut rng)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            out.push(h.join().expect("worker thread panicked"));
        }
    });
    out.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_takes_the_tail() {
        let (train, hold) = holdout_split(10, 0.1);
        assert_eq!(train, (0..9).collect::<Vec<_>>());
        assert_eq!(hold, vec![9]);
        let (train, hold) = holdout_split(5, 0.0);
        assert_eq!(train.len(), 5);
        assert!(hold.is_empty());
        // Never hold out everything.
        let (train, hold) = holdout_split(3, 1.0);
        assert_eq!(train.len(), 1);
        assert_eq!(hold.len(), 2);
    }
}
