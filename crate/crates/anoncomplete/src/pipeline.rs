//! High-level operations behind the command-line surface: preprocess,
//! anonymize, strip, train, evaluate, ensemble, complete, gradcheck and the
//! parameter report. Every artifact-producing run writes a manifest
//! recording command, config, seeds and input fingerprints; identically
//! configured runs produce bit-identical artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::anonymize::{anonymize_corpus, select_k, strip_corpus, ValueFilter};
use crate::corpus::{
    apply_vocabulary, build_vocabulary, chunk::Chunk, flatten, parse_ast_file, read_cache,
    write_cache, Corpus, FlatProgram, InternTable, View, EOF_ID, UNK_ID,
};
use crate::error::{Error, Result};
use crate::eval::{ensemble_evaluate, evaluate, EvalReport};
use crate::model::checkpoint::verify_fingerprint;
use crate::model::{
    load_checkpoint, params::count_params, predict_next, run_chunk, save_checkpoint,
    CarriedState, Mode, Model, ModelConfig, Prediction,
};
use crate::rng::{fnv1a, fnv1a_parts, Rng};
use crate::tensor::gradcheck::{grad_check, GradCheckReport};
use crate::tensor::params::ParamSet;
use crate::train::targets::{make_targets, TargetKind};
use crate::train::{position_loss, train, Strategy, TrainFile};

/// Provenance record written next to every produced artifact.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub inputs: Vec<ManifestInput>,
    pub outputs: Vec<String>,
    pub run_id: String,
    pub wall_secs: f64,
    pub version: String,
}

#[derive(Debug, Serialize)]
pub struct ManifestInput {
    pub path: String,
    pub fingerprint: String,
}

/// Deterministic run id over command, config, seed and input fingerprints.
/// Wall-clock time is deliberately excluded.
pub fn compute_run_id(
    command: &str,
    config: &BTreeMap<String, String>,
    seed: u64,
    inputs: &[ManifestInput],
) -> u64 {
    let mut parts: Vec<Vec<u8>> = vec![command.as_bytes().to_vec()];
    for (k, v) in config {
        parts.push(k.as_bytes().to_vec());
        parts.push(v.as_bytes().to_vec());
    }
    parts.push(seed.to_le_bytes().to_vec());
    for i in inputs {
        parts.push(i.path.as_bytes().to_vec());
        parts.push(i.fingerprint.as_bytes().to_vec());
    }
    fnv1a_parts(parts.iter().map(Vec::as_slice))
}

pub fn file_fingerprint(path: &Path) -> Result<u64> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(fnv1a(&bytes))
}

fn manifest_input(path: &Path) -> Result<ManifestInput> {
    Ok(ManifestInput {
        path: path.display().to_string(),
        fingerprint: format!("{:016x}", file_fingerprint(path)?),
    })
}

struct ManifestBuilder {
    command: String,
    config: BTreeMap<String, String>,
    seed: u64,
    inputs: Vec<ManifestInput>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    fn new(command: &str, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config: BTreeMap::new(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn cfg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(manifest_input(path)?);
        Ok(self)
    }

    fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    fn run_id(&self) -> u64 {
        compute_run_id(&self.command, &self.config, self.seed, &self.inputs)
    }

    /// Writes `<primary_output>.manifest.json`.
    fn write(&self, primary_output: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config: self.config.clone(),
            seed: self.seed,
            inputs: self.inputs.iter().map(|i| ManifestInput {
                path: i.path.clone(),
                fingerprint: i.fingerprint.clone(),
            }).collect(),
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            run_id: format!("{:016x}", self.run_id()),
            wall_secs: self.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let path = manifest_path(primary_output);
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

// ---- subcommand bodies ----

pub struct PreprocessOutcome {
    pub programs: usize,
    pub rejected: usize,
    pub tokens: usize,
    pub vocab_values: usize,
    pub cache_path: PathBuf,
    pub vocab_path: PathBuf,
}

/// parse + flatten + vocabulary + binary cache + text vocabulary.
pub fn preprocess(input: &Path, out: &Path, max_values: usize, seed: u64) -> Result<PreprocessOutcome> {
    let mut mb = ManifestBuilder::new("preprocess", seed);
    mb.cfg("max_values", max_values);
    mb.input(input)?;

    let parsed = parse_ast_file(input)?;
    let mut intern = InternTable::new();
    let mut programs: Vec<FlatProgram> = Vec::with_capacity(parsed.programs.len());
    let mut rejected = parsed.rejected.len();
    for nodes in &parsed.programs {
        match flatten(nodes, &mut intern) {
            Some(fp) => programs.push(fp),
            None => rejected += 1,
        }
    }
    if programs.is_empty() {
        return Err(Error::Config(format!(
            "no valid programs in {} ({} rejected)",
            input.display(),
            rejected
        )));
    }
    let vocab = build_vocabulary(&programs, &intern, max_values);
    apply_vocabulary(&mut programs, &vocab);

    let n = programs.len();
    let tokens = programs.iter().map(FlatProgram::len).sum();
    let corpus = Corpus {
        view: View::Full,
        vocab,
        full_values: intern.values,
        programs,
        anon_maps: vec![Vec::new(); n],
        run_id: mb.run_id(),
    };
    write_cache(&corpus, out)?;
    let vocab_path = out.with_extension("vocab");
    corpus.vocab.write_text(&vocab_path)?;
    mb.output(out).output(&vocab_path).write(out)?;

    Ok(PreprocessOutcome {
        programs: corpus.programs.len(),
        rejected,
        tokens,
        vocab_values: corpus.vocab.num_values(),
        cache_path: out.to_path_buf(),
        vocab_path,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

pub struct AnonymizeOutcome {
    pub k: usize,
    pub cache_path: PathBuf,
}

pub fn anonymize_cmd(
    input: &Path,
    out: &Path,
    k: KChoice,
    coverage: f64,
    seed: u64,
    filter: Option<ValueFilter>,
) -> Result<AnonymizeOutcome> {
    let corpus = read_cache(input)?;
    if corpus.view != View::Full {
        return Err(Error::Config(
            "anonymize expects a full-view cache (run preprocess first)".into(),
        ));
    }
    let k = match k {
        KChoice::Fixed(k) => k,
        KChoice::Auto => select_k(&corpus.programs, coverage),
    };
    let mut mb = ManifestBuilder::new("anonymize", seed);
    mb.cfg("k", k).cfg("coverage", coverage);
    if let Some(f) = &filter {
        mb.cfg("value_filter", f.types.join(","));
    }
    mb.input(input)?;
    let mut anon = anonymize_corpus(&corpus, k, seed, filter.as_ref())?;
    anon.run_id = mb.run_id();
    write_cache(&anon, out)?;
    let vocab_path = out.with_extension("vocab");
    anon.vocab.write_text(&vocab_path)?;
    mb.output(out).output(&vocab_path).write(out)?;
    Ok(AnonymizeOutcome {
        k,
        cache_path: out.to_path_buf(),
    })
}

pub fn strip_cmd(input: &Path, out: &Path) -> Result<()> {
    let corpus = read_cache(input)?;
    if corpus.view != View::Full {
        return Err(Error::Config(
            "strip expects a full-view cache (run preprocess first)".into(),
        ));
    }
    let mut mb = ManifestBuilder::new("strip", 0);
    mb.input(input)?;
    let mut stripped = strip_corpus(&corpus);
    stripped.run_id = mb.run_id();
    write_cache(&stripped, out)?;
    let vocab_path = out.with_extension("vocab");
    stripped.vocab.write_text(&vocab_path)?;
    mb.output(out).output(&vocab_path).write(out)?;
    Ok(())
}

#[derive(Serialize)]
struct MetricsLine {
    epoch: usize,
    split: &'static str,
    loss: Option<f64>,
    accuracy: Option<f64>,
}

pub struct TrainCmdOutcome {
    pub final_checkpoint: PathBuf,
    pub metrics_path: PathBuf,
    pub final_holdout_accuracy: Option<f64>,
}

/// Runs the trainer from a parsed config file, writing per-epoch
/// checkpoints, line-delimited metrics, and the final model.
pub fn train_cmd(file: &TrainFile, config_path: Option<&Path>) -> Result<TrainCmdOutcome> {
    let corpus_path = file
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("config is missing 'corpus ='".into()))?;
    let out_dir = file
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("train-out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let corpus = read_cache(corpus_path)?;
    if let (Some(k), View::Anonymized { k: have, .. }) = (file.k, corpus.view) {
        if k as u32 != have {
            return Err(Error::Config(format!(
                "config expects k = {k} but the corpus was anonymized with k = {have}"
            )));
        }
    }

    let cfg = &file.train;
    let mut mb = ManifestBuilder::new("train", cfg.seed);
    mb.cfg("mode", cfg.mode.as_str())
        .cfg("strategy", cfg.strategy.as_str())
        .cfg("type_emb_dim", cfg.type_emb_dim)
        .cfg("value_emb_dim", cfg.value_emb_dim)
        .cfg("hidden_dim", cfg.hidden_dim)
        .cfg("window", cfg.window)
        .cfg("attention", cfg.attention)
        .cfg("pointer", cfg.pointer)
        .cfg("lr", cfg.lr)
        .cfg("decay", cfg.decay)
        .cfg("weight_decay", cfg.weight_decay)
        .cfg("epochs", cfg.epochs)
        .cfg("batch_size", cfg.batch_size)
        .cfg("clip_norm", cfg.clip_norm)
        .cfg("holdout_fraction", cfg.holdout_fraction);
    if let Some(cp) = config_path {
        mb.input(cp)?;
    }
    mb.input(corpus_path)?;
    let run_id = mb.run_id();

    let metrics_path = out_dir.join("metrics.jsonl");
    let mut metrics_file = std::fs::File::create(&metrics_path)
        .map_err(|e| Error::io(&metrics_path, e))?;
    let fingerprint = corpus.fingerprint();

    let out_dir_cb = out_dir.clone();
    let outcome = train::<f32>(&corpus, cfg, |model, summary| {
        use std::io::Write;
        let ckpt = out_dir_cb.join(format!("ckpt_epoch_{}.anm", summary.epoch));
        save_checkpoint(model, fingerprint, run_id, &ckpt)?;
        for line in [
            MetricsLine {
                epoch: summary.epoch,
                split: "train",
                loss: Some(summary.train_loss),
                accuracy: None,
            },
            MetricsLine {
                epoch: summary.epoch,
                split: "holdout",
                loss: None,
                accuracy: summary.holdout_accuracy,
            },
        ] {
            let text = serde_json::to_string(&line)
                .map_err(|e| Error::Config(format!("metrics serialization failed: {e}")))?;
            writeln!(metrics_file, "{text}").map_err(|e| Error::io(&metrics_path, e))?;
        }
        Ok(())
    })?;

    let final_path = out_dir.join("model.anm");
    save_checkpoint(&outcome.model, fingerprint, run_id, &final_path)?;
    for e in 0..cfg.epochs {
        mb.output(&out_dir.join(format!("ckpt_epoch_{e}.anm")));
    }
    mb.output(&metrics_path).output(&final_path).write(&final_path)?;

    Ok(TrainCmdOutcome {
        final_checkpoint: final_path,
        metrics_path,
        final_holdout_accuracy: outcome.epochs.last().and_then(|e| e.holdout_accuracy),
    })
}

pub fn eval_cmd(model_path: &Path, corpus_path: &Path) -> Result<EvalReport> {
    let (model, header) = load_checkpoint::<f32>(model_path)?;
    let corpus = read_cache(corpus_path)?;
    verify_fingerprint(&header, corpus.fingerprint())?;
    evaluate(&model, &corpus)
}

pub fn ensemble_cmd(
    model_a: &Path,
    model_b: &Path,
    corpus_full: &Path,
    corpus_anon: &Path,
) -> Result<EvalReport> {
    let (a, ha) = load_checkpoint::<f32>(model_a)?;
    let (b, hb) = load_checkpoint::<f32>(model_b)?;
    let full = read_cache(corpus_full)?;
    let anon = read_cache(corpus_anon)?;
    verify_fingerprint(&ha, full.fingerprint())?;
    verify_fingerprint(&hb, anon.fingerprint())?;
    ensemble_evaluate(&a, &full, &b, &anon)
}

/// One greedy continuation step.
#[derive(Debug, Serialize)]
pub struct CompletionStep {
    pub position: usize,
    pub value: String,
    pub probability: f64,
    pub mechanism: &'static str,
    pub actual: String,
}

/// Greedy completion: the prefix program runs teacher-forced up to its last
/// `n` tokens, then the model's predicted values are fed back while node
/// types come from the file.
pub fn complete_cmd(
    model_path: &Path,
    corpus_path: &Path,
    prefix_path: &Path,
    n: usize,
    seed: u64,
) -> Result<Vec<CompletionStep>> {
    let (model, header) = load_checkpoint::<f32>(model_path)?;
    let corpus = read_cache(corpus_path)?;
    verify_fingerprint(&header, corpus.fingerprint())?;

    let parsed = parse_ast_file(prefix_path)?;
    let nodes = parsed
        .programs
        .first()
        .ok_or_else(|| Error::Config("prefix file contains no parsable program".into()))?;
    let mut intern = InternTable::new();
    let flat = flatten(nodes, &mut intern)
        .ok_or_else(|| Error::Config("prefix program is not a tree".into()))?;

    // Re-resolve against the corpus tables: orig ids through the full value
    // table, visible ids per view.
    let mut program = flat.clone();
    for (i, tok) in program.tokens.iter_mut().enumerate() {
        let type_name = intern.types.name(flat.tokens[i].0);
        tok.0 = corpus.vocab.resolve_type(type_name);
        let orig_local = flat.orig[i];
        let orig = if crate::corpus::is_dummy(orig_local) {
            orig_local
        } else {
            corpus.full_values.resolve(intern.values.name(orig_local))
        };
        program.orig[i] = orig;
        tok.1 = match corpus.view {
            View::Full => corpus.vocab.remap.get(orig as usize).copied().unwrap_or(UNK_ID),
            View::Stripped => {
                if crate::corpus::is_dummy(orig) {
                    orig
                } else {
                    UNK_ID
                }
            }
            View::Anonymized { .. } => tok.1, // assigned below
        };
    }
    if let View::Anonymized { k, .. } = corpus.view {
        let mut rng = Rng::new(seed);
        crate::anonymize::anonymize_program(&mut program, k as usize, &mut rng, None, None)?;
    }

    let t = program.len();
    if n == 0 || n >= t {
        return Err(Error::Config(format!(
            "n must be between 1 and the prefix length minus one (prefix has {t} tokens)"
        )));
    }
    let split = t - n;

    let mut carried = CarriedState::fresh(&model.config);
    let mut steps_out = Vec::new();
    let mut fed = program.clone();
    for pos in 0..t - 1 {
        let ch = single_token_chunk(&fed, pos);
        let run = run_chunk(&model, &ch, &carried)?;
        if pos + 1 >= split {
            let merged = run.merged_distribution(0);
            let (pred, prob) = predict_next(&merged, model.config.num_values);
            let (value, visible, mechanism) = match pred {
                Prediction::Vocab(v) => (
                    corpus.vocab.values.name(v).to_string(),
                    v,
                    "vocabulary",
                ),
                Prediction::Copy { offset } => {
                    let src = pos - offset as usize;
                    (
                        corpus.full_values.name(fed.orig[src]).to_string(),
                        fed.tokens[src].1,
                        "pointer",
                    )
                }
            };
            let actual = corpus.full_values.name(program.orig[pos + 1]).to_string();
            steps_out.push(CompletionStep {
                position: pos + 1,
                value,
                probability: prob,
                mechanism,
                actual,
            });
            // Greedy feedback: the model sees its own prediction.
            fed.tokens[pos + 1].1 = visible;
        }
        carried = run.carried();
    }
    Ok(steps_out)
}

fn single_token_chunk(program: &FlatProgram, pos: usize) -> Chunk {
    let t = program.len();
    let mut has_children = vec![false; t];
    for &p in &program.parent {
        if p >= 0 {
            has_children[p as usize] = true;
        }
    }
    Chunk {
        start: pos,
        tokens: vec![program.tokens[pos]],
        orig: vec![program.orig[pos]],
        next_parent: vec![if pos + 1 < t { program.parent[pos + 1] } else { -1 }],
        is_parent: vec![has_children[pos]],
        targets: vec![TargetKind::Ignore],
        carry: pos > 0,
    }
}

// ---- full-model gradient check ----

#[derive(Debug, Clone)]
pub struct GradcheckSpec {
    pub hidden: usize,
    pub value_emb: usize,
    pub type_emb: usize,
    pub k: usize,
    pub num_types: usize,
    pub chunk_len: usize,
    pub seed: u64,
    pub eps: f64,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        GradcheckSpec {
            hidden: 8,
            value_emb: 6,
            type_emb: 5,
            k: 4,
            num_types: 7,
            chunk_len: 14,
            seed: 5,
            eps: 1e-5,
        }
    }
}

/// Builds a small program whose targets exercise every loss path: plain
/// vocabulary targets, pointer targets, both-sided positions and ignored
/// positions.
fn gradcheck_program(spec: &GradcheckSpec, rng: &mut Rng) -> FlatProgram {
    let t = spec.chunk_len;
    let mut tokens = Vec::with_capacity(t);
    let mut orig = Vec::with_capacity(t);
    let mut parent = Vec::with_capacity(t);
    for i in 0..t {
        let ty = 3 + rng.below(spec.num_types - 3) as u32;
        let (visible, o) = if i == 0 {
            (0u32, 0u32) // root EMPTY
        } else if i == t - 1 {
            (EOF_ID, EOF_ID)
        } else {
            match rng.below(5) {
                0 => (0, 0),
                // An out-of-vocabulary identity repeated nearby: creates
                // Pointer targets.
                1 => (UNK_ID, 1000),
                // A second OOV identity used once: creates Ignore.
                2 => (UNK_ID, 2000 + i as u32),
                // Placeholders, repeated: creates Vocab and Both targets.
                _ => {
                    let v = 3 + rng.below(spec.k) as u32;
                    (v, 100 + v)
                }
            }
        };
        tokens.push((ty, visible));
        orig.push(o);
        parent.push(if i == 0 || i == t - 1 {
            -1
        } else {
            rng.below(i) as i32
        });
    }
    FlatProgram {
        tokens,
        orig,
        parent,
    }
}

/// Finite-difference verification of the complete dynamic-mode pipeline:
/// both LSTMs, attention, parent connection, tied logits, switcher and the
/// min loss, in 64-bit precision.
pub fn full_model_gradcheck(spec: &GradcheckSpec) -> Result<(GradCheckReport, usize)> {
    let config = ModelConfig {
        mode: Mode::Dynamic,
        type_emb_dim: spec.type_emb,
        value_emb_dim: spec.value_emb,
        hidden_dim: spec.hidden,
        window: 50,
        num_types: spec.num_types,
        num_values: spec.k + 3,
        attention: true,
        pointer: true,
    };
    let mut rng = Rng::new(spec.seed);
    let program = gradcheck_program(spec, &mut rng);
    let chunks = crate::corpus::chunk(&program, 50);
    assert_eq!(chunks.len(), 1, "gradcheck uses a single chunk");
    let targets = make_targets(&program, 50);
    let kinds: std::collections::BTreeSet<&'static str> = targets
        .iter()
        .map(|t| match t {
            TargetKind::Vocab(_) => "vocab",
            TargetKind::Pointer(_) => "pointer",
            TargetKind::Both(..) => "both",
            TargetKind::Ignore => "ignore",
        })
        .collect();
    debug_assert!(kinds.len() >= 3, "target mix too thin: {kinds:?}");

    let model: Model<f64> = Model::new(config.clone(), spec.seed)?;

    let loss_of = |params: &ParamSet<f64>| -> f64 {
        let m = Model::from_parts(config.clone(), params.clone()).expect("valid params");
        let mut run = run_chunk(&m, &chunks[0], &CarriedState::fresh(&m.config)).expect("forward");
        let mut rng = Rng::new(0);
        let mut losses = Vec::new();
        for (i, target) in chunks[0].targets.iter().enumerate() {
            let step = run.steps[i].clone();
            if let Some(l) =
                position_loss(&mut run.tape, &step, *target, Strategy::Min, &mut rng)
            {
                losses.push(l);
            }
        }
        let total = run.tape.sum_list(&losses);
        run.tape.scalar_value(total)
    };

    // Analytic gradients once.
    let (analytic, counted) = {
        let mut run = run_chunk(&model, &chunks[0], &CarriedState::fresh(&model.config))?;
        let mut rng = Rng::new(0);
        let mut losses = Vec::new();
        for (i, target) in chunks[0].targets.iter().enumerate() {
            let step = run.steps[i].clone();
            if let Some(l) =
                position_loss(&mut run.tape, &step, *target, Strategy::Min, &mut rng)
            {
                losses.push(l);
            }
        }
        let counted = losses.len();
        let total = run.tape.sum_list(&losses);
        if let Some(bad) = run.tape.first_non_finite() {
            return Err(Error::NonFinite(format!(
                "forward pass produced a non-finite value at node {}",
                bad.index()
            )));
        }
        let mut grads = run.tape.backward(total);
        let analytic: Vec<Vec<f64>> = run
            .param_ids
            .iter()
            .map(|&id| grads.take(id).unwrap_or_default())
            .collect();
        (analytic, counted)
    };

    let report = grad_check(&model.params, &analytic, loss_of, spec.eps, None, spec.seed);
    Ok((report, counted))
}

// ---- parameter report ----

#[derive(Debug, Serialize)]
pub struct ParamReport {
    pub mode: String,
    pub tensors: Vec<(String, usize)>,
    pub total: usize,
}

pub fn param_report(config: &ModelConfig) -> ParamReport {
    let (tensors, total) = count_params(config);
    ParamReport {
        mode: config.mode.as_str().to_string(),
        tensors,
        total,
    }
}

/// The three anonymized-setting architectures at the published dimensions:
/// type embeddings 300, value embeddings 1200 (500 for dynamic), hidden
/// 1500, K = 500 placeholders, attention and pointer on.
pub fn paper_dims_config(mode: Mode, num_types: usize) -> ModelConfig {
    let (value_emb_dim, num_values) = match mode {
        Mode::NoVars => (1200, 3),
        Mode::Static => (1200, 503),
        Mode::Dynamic => (500, 503),
        Mode::DynamicFullData => (500, 50003),
    };
    ModelConfig {
        mode,
        type_emb_dim: 300,
        value_emb_dim,
        hidden_dim: 1500,
        window: 50,
        num_types,
        num_values,
        attention: true,
        pointer: true,
    }
}

pub fn paper_comparison(num_types: usize) -> Vec<ParamReport> {
    [Mode::NoVars, Mode::Static, Mode::Dynamic]
        .into_iter()
        .map(|m| param_report(&paper_dims_config(m, num_types)))
        .collect()
}

// ---- corpus generation ----

pub fn gen_corpus_cmd(out: &Path, cfg: &crate::synth::SynthConfig) -> Result<usize> {
    let mut mb = ManifestBuilder::new("gen-corpus", cfg.seed);
    mb.cfg("programs", cfg.programs)
        .cfg("rare_name_prob", cfg.rare_name_prob);
    let programs = crate::synth::generate(cfg);
    crate::synth::write_jsonl(&programs, out)?;
    mb.output(out).write(out)?;
    Ok(programs.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthConfig;

    fn setup(dir: &Path) -> (PathBuf, PathBuf) {
        let jsonl = dir.join("corpus.jsonl");
        gen_corpus_cmd(
            &jsonl,
            &SynthConfig {
                programs: 12,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let cache = dir.join("full.anc");
        preprocess(&jsonl, &cache, 100, 0).unwrap();
        (jsonl, cache)
    }

    #[test]
    fn preprocess_writes_cache_vocab_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let (_, cache) = setup(dir.path());
        assert!(cache.exists());
        assert!(cache.with_extension("vocab").exists());
        assert!(manifest_path(&cache).exists());
        let corpus = read_cache(&cache).unwrap();
        assert_eq!(corpus.programs.len(), 12);
        assert_eq!(corpus.view, View::Full);
        assert_ne!(corpus.run_id, 0);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (jsonl, cache) = setup(dir.path());
        let cache2 = dir.path().join("again.anc");
        preprocess(&jsonl, &cache2, 100, 0).unwrap();
        assert_eq!(
            std::fs::read(&cache).unwrap(),
            std::fs::read(&cache2).unwrap()
        );
        let anon1 = dir.path().join("a1.anc");
        let anon2 = dir.path().join("a2.anc");
        anonymize_cmd(&cache, &anon1, KChoice::Auto, 0.99, 11, None).unwrap();
        anonymize_cmd(&cache, &anon2, KChoice::Auto, 0.99, 11, None).unwrap();
        assert_eq!(
            std::fs::read(&anon1).unwrap(),
            std::fs::read(&anon2).unwrap()
        );
    }

    #[test]
    fn anonymize_then_strip_views() {
        let dir = tempfile::tempdir().unwrap();
        let (_, cache) = setup(dir.path());
        let anon = dir.path().join("anon.anc");
        let out = anonymize_cmd(&cache, &anon, KChoice::Auto, 0.99, 11, None).unwrap();
        assert!(out.k >= 1);
        let a = read_cache(&anon).unwrap();
        assert!(matches!(a.view, View::Anonymized { .. }));
        assert_eq!(a.vocab.num_values(), out.k + 3);

        let stripped = dir.path().join("strip.anc");
        strip_cmd(&cache, &stripped).unwrap();
        let s = read_cache(&stripped).unwrap();
        assert_eq!(s.vocab.num_values(), 3);
        for p in &s.programs {
            for &(_, v) in &p.tokens {
                assert!(v < 3);
            }
        }
    }

    #[test]
    fn full_gradcheck_passes() {
        let (report, counted) = full_model_gradcheck(&GradcheckSpec::default()).unwrap();
        assert!(counted > 3, "too few counted positions: {counted}");
        assert!(
            report.max_rel_err < 1e-4,
            "gradient check failed: {:?}",
            report
        );
    }

    #[test]
    fn paper_dims_ordering() {
        let reports = paper_comparison(330);
        let total = |mode: &str| {
            reports
                .iter()
                .find(|r| r.mode == mode)
                .map(|r| r.total)
                .unwrap()
        };
        assert!(total("dynamic") < total("no_vars"));
        assert!(total("no_vars") < total("static"));
    }
}
