use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One node of a serialized AST. `children` holds indices into the same
/// program's node array; a node may carry a `value` only when it has no
/// children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub type_name: String,
    pub value: Option<String>,
    pub children: Vec<usize>,
}

impl AstNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Deserialize)]
struct RawNode {
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default)]
    value: Option<String>,
    #[serde(default)]
    children: Option<Vec<usize>>,
}

/// Result of reading a corpus file: parsed programs plus counts of lines
/// that were rejected (and why, with 1-based line numbers).
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub programs: Vec<Vec<AstNode>>,
    pub rejected: Vec<(usize, String)>,
}

impl ParseOutcome {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

/// Parses one line: a JSON array of node objects with fields `type`,
/// optional `value` and optional `children` (integer indices).
pub fn parse_ast_line(line: &str) -> std::result::Result<Vec<AstNode>, String> {
    let raw: Vec<RawNode> =
        serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let n = raw.len();
    let mut nodes = Vec::with_capacity(n);
    for (i, r) in raw.into_iter().enumerate() {
        let children = r.children.unwrap_or_default();
        for &c in &children {
            if c >= n {
                return Err(format!("node {i}: child index {c} out of bounds ({n} nodes)"));
            }
            if c == i {
                return Err(format!("node {i}: self-referential child"));
            }
        }
        if r.value.is_some() && !children.is_empty() {
            return Err(format!("node {i}: non-leaf node carries a value"));
        }
        nodes.push(AstNode {
            type_name: r.type_name,
            value: r.value,
            children,
        });
    }
    Ok(nodes)
}

/// Reads a line-delimited corpus file. Malformed lines are rejected and
/// counted; parsing continues.
pub fn parse_ast_file(path: &Path) -> Result<ParseOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_ast_line(&line) {
            Ok(nodes) => out.programs.push(nodes),
            Err(msg) => out.rejected.push((idx + 1, msg)),
        }
    }
    Ok(out)
}
