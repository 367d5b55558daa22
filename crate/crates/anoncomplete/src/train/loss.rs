use crate::error::{Error, Result};
use crate::model::StepOut;
use crate::rng::Rng;
use crate::tensor::scalar::Scalar;
use crate::tensor::tape::{Tape, ValueId};
use crate::train::targets::TargetKind;

/// How to combine vocabulary and pointer losses at positions where the
/// target is both in-vocabulary and copyable from the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Vocabulary loss for in-vocabulary targets, pointer loss for
    /// copyable out-of-vocabulary targets.
    Standard,
    /// Prefer the pointer loss whenever the target is copyable.
    PtrPriority,
    /// Prefer the vocabulary loss whenever the target is in-vocabulary.
    VocabPriority,
    /// The smaller of the two losses, decided per position per step.
    Min,
    /// A coin flip per position per step.
    Random,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Standard => "standard",
            Strategy::PtrPriority => "ptr_priority",
            Strategy::VocabPriority => "vocab_priority",
            Strategy::Min => "min",
            Strategy::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        match s {
            "standard" => Ok(Strategy::Standard),
            "ptr_priority" => Ok(Strategy::PtrPriority),
            "vocab_priority" => Ok(Strategy::VocabPriority),
            "min" => Ok(Strategy::Min),
            "random" => Ok(Strategy::Random),
            other => Err(Error::Config(format!(
                "unknown strategy '{other}' (expected standard|ptr_priority|vocab_priority|min|random)"
            ))),
        }
    }
}

/// Negative log-likelihood of the vocabulary slot `target` under the merged
/// distribution: -log(s * w_target) when a switcher is live, -log w_target
/// otherwise.
fn vocab_nll<S: Scalar>(tape: &mut Tape<S>, step: &StepOut, target: u32) -> ValueId {
    let nll = tape.log_softmax_nll(step.vocab_logits, target as usize);
    match step.switch_logit {
        Some(u) => {
            // -log sigmoid(u) = softplus(-u)
            let neg_u = tape.neg(u);
            let pen = tape.softplus(neg_u);
            tape.add(nll, pen)
        }
        None => nll,
    }
}

/// Negative log-likelihood of the pointer slot `offset` positions back:
/// -log((1-s) * l_j) where j is the ring index of that offset.
fn pointer_nll<S: Scalar>(tape: &mut Tape<S>, step: &StepOut, offset: u32) -> Option<ValueId> {
    let scores = step.attn_scores?;
    let u = step.switch_logit?;
    let m = step.ring_len;
    if offset as usize > m {
        return None;
    }
    let idx = m - offset as usize;
    let nll = tape.log_softmax_nll(scores, idx);
    // -log(1 - sigmoid(u)) = softplus(u)
    let pen = tape.softplus(u);
    Some(tape.add(nll, pen))
}

/// Loss contribution of one position, or None for positions that are
/// ignored. For models without a pointer head, copy-only targets fall back
/// to the vocabulary loss toward UNK (the visible target), and Both targets
/// to their in-vocabulary side.
pub fn position_loss<S: Scalar>(
    tape: &mut Tape<S>,
    step: &StepOut,
    target: TargetKind,
    strategy: Strategy,
    rng: &mut Rng,
) -> Option<ValueId> {
    match target {
        TargetKind::Ignore => None,
        TargetKind::Vocab(t) => Some(vocab_nll(tape, step, t)),
        TargetKind::Pointer(offset) => match pointer_nll(tape, step, offset) {
            Some(nll) => Some(nll),
            None => Some(vocab_nll(tape, step, crate::corpus::UNK_ID)),
        },
        TargetKind::Both(t, offset) => {
            let want_ptr = match strategy {
                Strategy::Standard | Strategy::VocabPriority => false,
                Strategy::PtrPriority => true,
                Strategy::Min => {
                    let v = vocab_nll(tape, step, t);
                    match pointer_nll(tape, step, offset) {
                        Some(p) => return Some(tape.min2(v, p)),
                        None => return Some(v),
                    }
                }
                Strategy::Random => rng.chance(0.5),
            };
            if want_ptr {
                match pointer_nll(tape, step, offset) {
                    Some(p) => Some(p),
                    None => Some(vocab_nll(tape, step, t)),
                }
            } else {
                Some(vocab_nll(tape, step, t))
            }
        }
    }
}
