use crate::corpus::flatten::FlatProgram;
use crate::corpus::vocab::UNK_ID;

/// Training target for one position (the prediction of the next token's
/// value). Offsets count backwards from the current position: offset 1 is
/// the previous token, offset `window` the oldest attention slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Next value is in the vocabulary and not copyable from the window.
    Vocab(u32),
    /// Next value is UNK-mapped but its original value occurs in the
    /// window; points at the last occurrence.
    Pointer(u32),
    /// In the vocabulary and copyable; loss strategies pick a side.
    Both(u32, u32),
    /// UNK-mapped and absent from the window, or the final position.
    Ignore,
}

impl TargetKind {
    pub fn is_ignore(&self) -> bool {
        matches!(self, TargetKind::Ignore)
    }
}

/// Builds per-position targets for a whole program.
///
/// Position `i` predicts token `i + 1`. Copyability is determined on
/// original (pre-UNK, pre-anonymization) values over the `window` positions
/// strictly before `i`; among matches the largest position wins, i.e. the
/// last occurrence. The final position has no next token and is Ignore.
pub fn make_targets(program: &FlatProgram, window: usize) -> Vec<TargetKind> {
    let t = program.len();
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        if i + 1 >= t {
            out.push(TargetKind::Ignore);
            break;
        }
        let visible = program.tokens[i + 1].1;
        let target_orig = program.orig[i + 1];
        let lo = i.saturating_sub(window);
        let copy_offset = (lo..i)
            .rev()
            .find(|&j| program.orig[j] == target_orig)
            .map(|j| (i - j) as u32);
        out.push(match (visible != UNK_ID, copy_offset) {
            (true, None) => TargetKind::Vocab(visible),
            (true, Some(o)) => TargetKind::Both(visible, o),
            (false, Some(o)) => TargetKind::Pointer(o),
            (false, None) => TargetKind::Ignore,
        });
    }
    out
}
