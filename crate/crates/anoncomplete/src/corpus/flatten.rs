use crate::corpus::ast::AstNode;
use crate::corpus::vocab::{InternTable, EMPTY_ID, EOF_ID};

/// A program flattened to a depth-first token stream.
///
/// `tokens[i]` is the (node type id, node value id) pair visible to a model;
/// `orig[i]` is the pre-cutoff, pre-anonymization identity of the value (an
/// id into the corpus intern table) used for pointer targets and scoring;
/// `parent[i]` is the flat position of the token's parent, -1 for roots and
/// the trailing EOF token.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatProgram {
    pub tokens: Vec<(u32, u32)>,
    pub orig: Vec<u32>,
    pub parent: Vec<i32>,
}

impl FlatProgram {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Flat position of the parent of position `i`, if any.
    pub fn parent_of(&self, i: usize) -> Option<usize> {
        let p = self.parent[i];
        (p >= 0).then_some(p as usize)
    }

    /// For each position, the flat position of its last direct child
    /// (usize::MAX when the position has no children). Used by the model to
    /// evict parent hidden states once all children are processed.
    pub fn last_child_positions(&self) -> Vec<usize> {
        let mut last = vec![usize::MAX; self.len()];
        for (i, &p) in self.parent.iter().enumerate() {
            if p >= 0 {
                last[p as usize] = i;
            }
        }
        last
    }
}

/// Flattens a program (rooted at node 0) into preorder, appending one EOF
/// token. Non-leaf positions get the EMPTY value; leaves without a value
/// also map to EMPTY. Values are interned into `table`.
///
/// Returns None when the node array does not encode a tree reachable from
/// the root (a cycle or diamond shares a node between two parents).
pub fn flatten(program: &[AstNode], table: &mut InternTable) -> Option<FlatProgram> {
    if program.is_empty() {
        return Some(FlatProgram {
            tokens: vec![(EOF_ID, EOF_ID)],
            orig: vec![EOF_ID],
            parent: vec![-1],
        });
    }
    let n = program.len();
    let mut visited = vec![false; n];
    let mut tokens = Vec::with_capacity(n + 1);
    let mut orig = Vec::with_capacity(n + 1);
    let mut parent = Vec::with_capacity(n + 1);

    // Explicit stack of (node index, parent flat position).
    let mut stack: Vec<(usize, i32)> = vec![(0, -1)];
    while let Some((idx, par)) = stack.pop() {
        if visited[idx] {
            return None;
        }
        visited[idx] = true;
        let node = &program[idx];
        let flat_pos = tokens.len() as i32;
        let value_id = match &node.value {
            Some(v) => table.intern(v),
            None => EMPTY_ID,
        };
        let type_id = table.intern_type(&node.type_name);
        tokens.push((type_id, value_id));
        orig.push(value_id);
        parent.push(par);
        for &c in node.children.iter().rev() {
            stack.push((c, flat_pos));
        }
    }
    tokens.push((EOF_ID, EOF_ID));
    orig.push(EOF_ID);
    parent.push(-1);
    Some(FlatProgram {
        tokens,
        orig,
        parent,
    })
}
