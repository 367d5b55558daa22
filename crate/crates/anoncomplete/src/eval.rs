//! Accuracy under the UNK-as-wrong rule, per-category breakdowns, and
//! two-model max-probability ensembling.

use serde::Serialize;

use crate::corpus::{chunk, is_dummy, Corpus, View, UNK_ID};
use crate::error::{Error, Result};
use crate::model::{predict_next, run_chunk, CarriedState, Model, Prediction};
use crate::tensor::scalar::Scalar;

/// Counts for one target category.
#[derive(Debug, Clone, Copy, Default, Serialize, PartialEq)]
pub struct CategoryStats {
    pub total: usize,
    pub correct: usize,
}

impl CategoryStats {
    fn hit(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as usize;
    }

    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Evaluation outcome. Targets partition into dummies (EMPTY/EOF),
/// in-vocabulary values, and out-of-vocabulary values (reachable only by
/// copying); `via_pointer` additionally tracks positions where the model
/// chose the pointer segment.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub dummy: CategoryStats,
    pub in_vocab: CategoryStats,
    pub out_of_vocab: CategoryStats,
    pub via_pointer: CategoryStats,
    pub programs: usize,
    pub vocab_fingerprint: String,
}

impl EvalReport {
    pub fn render_table(&self) -> String {
        let row = |name: &str, s: &CategoryStats| {
            format!(
                "  {name:<14} {:>9} {:>9} {:>9.4}\n",
                s.total,
                s.correct,
                s.accuracy()
            )
        };
        let mut out = String::new();
        out.push_str(&format!(
            "accuracy {:.4} ({} / {}) over {} programs\n",
            self.accuracy, self.correct, self.total, self.programs
        ));
        out.push_str("  category          total   correct  accuracy\n");
        out.push_str(&row("dummy", &self.dummy));
        out.push_str(&row("in-vocab", &self.in_vocab));
        out.push_str(&row("out-of-vocab", &self.out_of_vocab));
        out.push_str(&row("via-pointer", &self.via_pointer));
        out
    }
}

fn check_compat<S: Scalar>(model: &Model<S>, corpus: &Corpus) -> Result<()> {
    if model.config.num_values != corpus.vocab.num_values()
        || model.config.num_types != corpus.vocab.types.len()
    {
        return Err(Error::Fingerprint(format!(
            "model expects {} values / {} types, corpus has {} / {}",
            model.config.num_values,
            model.config.num_types,
            corpus.vocab.num_values(),
            corpus.vocab.types.len()
        )));
    }
    Ok(())
}

/// Top-1 prediction and its probability for every predictable position of
/// one program (there are len-1 of them).
pub fn predictions_for_program<S: Scalar>(
    model: &Model<S>,
    corpus: &Corpus,
    prog_idx: usize,
) -> Result<Vec<(Prediction, f64)>> {
    let program = &corpus.programs[prog_idx];
    let chunks = chunk(program, model.config.window);
    let mut carried = CarriedState::fresh(&model.config);
    let mut out = Vec::with_capacity(program.len().saturating_sub(1));
    for ch in &chunks {
        let run = run_chunk(model, ch, &carried)?;
        for i in 0..ch.len() {
            if ch.start + i + 1 >= program.len() {
                break;
            }
            let merged = run.merged_distribution(i);
            out.push(predict_next(&merged, model.config.num_values));
        }
        carried = run.carried();
    }
    Ok(out)
}

/// Resolves a prediction to the original value identity it denotes, if any.
/// UNK from the vocabulary segment resolves to nothing (counted wrong).
fn prediction_orig(
    pred: Prediction,
    corpus: &Corpus,
    prog_idx: usize,
    position: usize,
) -> Option<u32> {
    match pred {
        Prediction::Vocab(UNK_ID) => None,
        Prediction::Vocab(v) if is_dummy(v) => Some(v),
        Prediction::Vocab(v) => match corpus.view {
            View::Full | View::Stripped => {
                let o = corpus.vocab.to_orig[v as usize];
                (o != UNK_ID).then_some(o)
            }
            View::Anonymized { .. } => corpus.placeholder_to_orig(prog_idx, v),
        },
        Prediction::Copy { offset } => {
            // Offsets count back from the position being processed, which
            // is one before the predicted position.
            let src = position.checked_sub(offset as usize + 1)?;
            Some(corpus.programs[prog_idx].orig[src])
        }
    }
}

fn is_correct(pred: Prediction, corpus: &Corpus, prog_idx: usize, target_position: usize) -> bool {
    let target_orig = corpus.programs[prog_idx].orig[target_position];
    prediction_orig(pred, corpus, prog_idx, target_position) == Some(target_orig)
}

fn record(
    report: &mut EvalReport,
    visible_target: u32,
    pred: Prediction,
    correct: bool,
) {
    report.total += 1;
    report.correct += correct as usize;
    if visible_target == UNK_ID {
        report.out_of_vocab.hit(correct);
    } else if is_dummy(visible_target) {
        report.dummy.hit(correct);
    } else {
        report.in_vocab.hit(correct);
    }
    if matches!(pred, Prediction::Copy { .. }) {
        report.via_pointer.hit(correct);
    }
}

fn accumulate_program(
    report: &mut EvalReport,
    corpus: &Corpus,
    prog_idx: usize,
    preds: &[(Prediction, f64)],
) {
    let program = &corpus.programs[prog_idx];
    for (i, &(pred, _)) in preds.iter().enumerate() {
        let target_pos = i + 1;
        let visible = program.tokens[target_pos].1;
        let correct = is_correct(pred, corpus, prog_idx, target_pos);
        record(report, visible, pred, correct);
    }
    report.programs += 1;
}

fn empty_report(corpus: &Corpus) -> EvalReport {
    EvalReport {
        total: 0,
        correct: 0,
        accuracy: 0.0,
        dummy: CategoryStats::default(),
        in_vocab: CategoryStats::default(),
        out_of_vocab: CategoryStats::default(),
        via_pointer: CategoryStats::default(),
        programs: 0,
        vocab_fingerprint: format!("{:016x}", corpus.fingerprint()),
    }
}

fn finish(mut report: EvalReport) -> EvalReport {
    report.accuracy = if report.total == 0 {
        0.0
    } else {
        report.correct as f64 / report.total as f64
    };
    report
}

/// Evaluates top-1 accuracy over the given programs (all when `indices` is
/// None). Deterministic: no randomness anywhere in inference.
pub fn evaluate_programs<S: Scalar>(
    model: &Model<S>,
    corpus: &Corpus,
    indices: Option<&[usize]>,
) -> Result<EvalReport> {
    check_compat(model, corpus)?;
    let mut report = empty_report(corpus);
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => ix,
        None => {
            all = (0..corpus.programs.len()).collect();
            &all
        }
    };
    for &p in indices {
        let preds = predictions_for_program(model, corpus, p)?;
        accumulate_program(&mut report, corpus, p, &preds);
    }
    Ok(finish(report))
}

pub fn evaluate<S: Scalar>(model: &Model<S>, corpus: &Corpus) -> Result<EvalReport> {
    evaluate_programs(model, corpus, None)
}

/// Max-probability ensemble of two models over two aligned views of the
/// same corpus. At each position the more confident model's prediction
/// wins (ties prefer model A); correctness is judged on original values,
/// so placeholder predictions translate back through the program's
/// anonymization map and copies through the copied position.
pub fn ensemble_evaluate<S: Scalar>(
    model_a: &Model<S>,
    corpus_a: &Corpus,
    model_b: &Model<S>,
    corpus_b: &Corpus,
) -> Result<EvalReport> {
    ensemble_evaluate_programs(model_a, corpus_a, model_b, corpus_b, None)
}

pub fn ensemble_evaluate_programs<S: Scalar>(
    model_a: &Model<S>,
    corpus_a: &Corpus,
    model_b: &Model<S>,
    corpus_b: &Corpus,
    indices: Option<&[usize]>,
) -> Result<EvalReport> {
    check_compat(model_a, corpus_a)?;
    check_compat(model_b, corpus_b)?;
    if corpus_a.programs.len() != corpus_b.programs.len() {
        return Err(Error::Config(format!(
            "corpora are not aligned: {} vs {} programs",
            corpus_a.programs.len(),
            corpus_b.programs.len()
        )));
    }
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => ix,
        None => {
            all = (0..corpus_a.programs.len()).collect();
            &all
        }
    };
    let mut report = empty_report(corpus_a);
    for &p in indices {
        let pa = &corpus_a.programs[p];
        let pb = &corpus_b.programs[p];
        if pa.len() != pb.len() || pa.orig != pb.orig {
            return Err(Error::Config(format!(
                "corpora are not aligned at program {p}: lengths {} vs {}",
                pa.len(),
                pb.len()
            )));
        }
        let preds_a = predictions_for_program(model_a, corpus_a, p)?;
        let preds_b = predictions_for_program(model_b, corpus_b, p)?;
        for (i, (&(pred_a, prob_a), &(pred_b, prob_b))) in
            preds_a.iter().zip(&preds_b).enumerate()
        {
            let target_pos = i + 1;
            let visible = pa.tokens[target_pos].1;
            let b_wins = prob_b > prob_a;
            let (winner, correct) = if b_wins {
                (pred_b, is_correct(pred_b, corpus_b, p, target_pos))
            } else {
                (pred_a, is_correct(pred_a, corpus_a, p, target_pos))
            };
            record(&mut report, visible, winner, correct);
        }
        report.programs += 1;
    }
    Ok(finish(report))
}
