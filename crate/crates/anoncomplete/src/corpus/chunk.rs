use crate::corpus::flatten::FlatProgram;
use crate::train::targets::{make_targets, TargetKind};

/// A consecutive slice of a flattened program, at most `window` tokens.
/// State carries across chunks of the same program; gradients do not.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    /// Flat position of the first token.
    pub start: usize,
    pub tokens: Vec<(u32, u32)>,
    pub orig: Vec<u32>,
    /// Flat position of the parent of token `start + i + 1` (the token being
    /// predicted at local position i); -1 when it has none or is past the
    /// program end.
    pub next_parent: Vec<i32>,
    /// Whether token `start + i` has children (its hidden state must be
    /// cached for later parent lookups).
    pub is_parent: Vec<bool>,
    pub targets: Vec<TargetKind>,
    /// True on every chunk except the first of a program.
    pub carry: bool,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits a program into consecutive non-overlapping chunks of at most
/// `window` tokens. The last chunk is not padded.
pub fn chunk(program: &FlatProgram, window: usize) -> Vec<Chunk> {
    assert!(window >= 1);
    let targets = make_targets(program, window);
    chunk_with_targets(program, &targets, window)
}

/// As `chunk`, with externally supplied targets (used when re-anonymizing
/// between epochs).
pub fn chunk_with_targets(
    program: &FlatProgram,
    targets: &[TargetKind],
    window: usize,
) -> Vec<Chunk> {
    let t = program.len();
    let mut has_children = vec![false; t];
    for &p in &program.parent {
        if p >= 0 {
            has_children[p as usize] = true;
        }
    }
    let mut chunks = Vec::with_capacity(t.div_ceil(window));
    let mut start = 0;
    while start < t {
        let end = (start + window).min(t);
        let next_parent = (start..end)
            .map(|i| if i + 1 < t { program.parent[i + 1] } else { -1 })
            .collect();
        chunks.push(Chunk {
            start,
            tokens: program.tokens[start..end].to_vec(),
            orig: program.orig[start..end].to_vec(),
            next_parent,
            is_parent: has_children[start..end].to_vec(),
            targets: targets[start..end].to_vec(),
            carry: start > 0,
        });
        start = end;
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::EMPTY_ID;

    fn program_of_len(t: usize) -> FlatProgram {
        FlatProgram {
            tokens: vec![(EMPTY_ID, EMPTY_ID); t],
            orig: vec![EMPTY_ID; t],
            parent: (0..t as i32).map(|i| i - 1).collect(),
        }
    }

    #[test]
    fn lengths_and_carry() {
        let p = program_of_len(120);
        let chunks = chunk(&p, 50);
        assert_eq!(chunks.iter().map(Chunk::len).collect::<Vec<_>>(), vec![50, 50, 20]);
        assert_eq!(
            chunks.iter().map(|c| c.carry).collect::<Vec<_>>(),
            vec![false, true, true]
        );
    }

    #[test]
    fn exact_window_is_one_chunk() {
        let p = program_of_len(50);
        let chunks = chunk(&p, 50);
        assert_eq!(chunks.len(), 1);
        assert!(!chunks[0].carry);
    }

    #[test]
    fn degenerate_single_token() {
        let p = program_of_len(1);
        let chunks = chunk(&p, 50);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].len(), 1);
        assert!(chunks[0].targets[0].is_ignore());
    }

    #[test]
    fn concatenation_reproduces_tokens() {
        let p = program_of_len(173);
        let chunks = chunk(&p, 50);
        let rebuilt: Vec<(u32, u32)> = chunks.iter().flat_map(|c| c.tokens.clone()).collect();
        assert_eq!(rebuilt, p.tokens);
        for (k, c) in chunks.iter().enumerate() {
            assert_eq!(c.start, k * 50);
        }
    }

    #[test]
    fn next_parent_crosses_chunk_boundary() {
        let p = program_of_len(60);
        let chunks = chunk(&p, 50);
        // Local position 49 of chunk 0 predicts flat token 50, whose parent
        // is flat position 49.
        assert_eq!(chunks[0].next_parent[49], 49);
        // The last position of the program predicts nothing.
        assert_eq!(chunks[1].next_parent[9], -1);
    }
}
