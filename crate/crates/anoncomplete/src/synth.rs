//! Deterministic synthetic AST corpus for desk-scale experiments.
//!
//! Generates programs in a small imperative language with realistic
//! variable behavior: declarations followed by recency-biased reuse, loop
//! variables, module-level globals revisited late in the program (beyond
//! the attention window), and a mix of common and rare identifiers. That
//! mix is what separates the model families: copy mechanisms need
//! within-window repeats, dynamic embeddings exploit identity at any
//! distance, and full-data models exploit globally meaningful names.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::AstNode;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub programs: usize,
    pub seed: u64,
    /// Probability that a fresh variable draws a rare (program-unique)
    /// name instead of one from the common pool.
    pub rare_name_prob: f64,
    /// Statements per function body.
    pub min_stmts: usize,
    pub max_stmts: usize,
    /// Distinct local variables per function.
    pub min_vars: usize,
    pub max_vars: usize,
    pub functions_min: usize,
    pub functions_max: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            programs: 2200,
            seed: 7,
            rare_name_prob: 0.3,
            min_stmts: 4,
            max_stmts: 10,
            min_vars: 3,
            max_vars: 8,
            functions_min: 1,
            functions_max: 2,
        }
    }
}

const COMMON_NAMES: &[&str] = &[
    "i", "j", "k", "n", "x", "y", "z", "s", "t", "a", "b", "c", "data", "result", "count",
    "total", "items", "item", "value", "values", "key", "keys", "node", "nodes", "out", "buf",
    "idx", "len", "size", "name", "path", "line", "lines", "text", "word", "words", "acc",
    "sum", "tmp", "cur", "prev", "next", "start", "end", "lo", "hi", "mid", "left", "right",
    "row", "col", "grid", "queue", "stack", "seen", "cache", "state", "config", "args", "ret",
    "err", "ok", "flag", "done", "head", "tail", "root", "child", "parent", "depth", "width",
    "score", "best", "worst", "mean", "mask", "bits", "byte", "chunk", "block", "page", "pos",
    "offset", "index", "table", "entry", "field", "label", "tag", "kind", "level", "step",
    "delta", "eps", "rate", "limit", "bound", "span", "window", "frame", "batch", "group",
    "pair", "first", "last", "other", "source", "target", "dest", "src", "dst", "input",
    "output", "buffer", "stream", "reader", "writer", "handle", "token", "tokens", "symbol",
];

const FUNC_NAMES: &[&str] = &[
    "main", "init", "update", "process", "compute", "run", "parse", "scan", "emit", "build",
    "load", "store", "read", "write", "merge", "split", "find", "insert", "remove", "walk",
    "visit", "reduce", "map_items", "filter_items", "solve", "check", "verify", "encode",
    "decode", "pack", "unpack", "flush", "reset", "setup", "teardown", "step", "advance",
];

const NUM_LITERALS: &[&str] = &[
    "0", "1", "2", "3", "4", "5", "8", "10", "16", "32", "64", "100", "255", "1000", "-1",
    "0.0", "1.0", "0.5", "2.0", "1e-6",
];

const STR_LITERALS: &[&str] = &[
    "\"\"", "\" \"", "\",\"", "\"\\n\"", "\"ok\"", "\"error\"", "\"name\"", "\"id\"",
    "\"utf-8\"", "\"r\"", "\"w\"", "\"key\"", "\"value\"", "\"end\"",
];

const BIN_OPS: &[&str] = &["Add", "Sub", "Mult", "Div", "Mod"];
const CMP_OPS: &[&str] = &["Lt", "Gt", "Eq", "NotEq", "LtE"];

/// Zipf-ish draw: heavy head, long tail.
fn zipf<'a>(rng: &mut Rng, pool: &[&'a str]) -> &'a str {
    let u = rng.unit_f64();
    let idx = ((pool.len() as f64).powf(u) - 1.0) as usize;
    pool[idx.min(pool.len() - 1)]
}

struct Builder {
    nodes: Vec<AstNode>,
}

impl Builder {
    fn new() -> Self {
        Builder { nodes: Vec::new() }
    }

    fn push(&mut self, type_name: &str, value: Option<String>) -> usize {
        self.nodes.push(AstNode {
            type_name: type_name.to_string(),
            value,
            children: Vec::new(),
        });
        self.nodes.len() - 1
    }

    fn attach(&mut self, parent: usize, child: usize) {
        self.nodes[parent].children.push(child);
    }

    fn leaf(&mut self, parent: usize, type_name: &str, value: &str) -> usize {
        let id = self.push(type_name, Some(value.to_string()));
        self.attach(parent, id);
        id
    }

    fn inner(&mut self, parent: usize, type_name: &str) -> usize {
        let id = self.push(type_name, None);
        self.attach(parent, id);
        id
    }
}

struct Scope {
    /// Variable names; most recently used entries sit at the back, so a
    /// back-to-front geometric scan gives recency bias.
    vars: Vec<String>,
    globals: Vec<String>,
}

impl Scope {
    fn pick(&self, rng: &mut Rng) -> Option<String> {
        if self.vars.is_empty() {
            return None;
        }
        let n = self.vars.len();
        let mut idx = 0;
        for back in 0..n {
            idx = n - 1 - back;
            if rng.chance(0.6) {
                break;
            }
        }
        Some(self.vars[idx].clone())
    }

    fn touch(&mut self, name: &str) {
        if let Some(p) = self.vars.iter().position(|v| v == name) {
            let v = self.vars.remove(p);
            self.vars.push(v);
        }
    }
}

struct Gen<'a> {
    rng: Rng,
    cfg: &'a SynthConfig,
}

impl Gen<'_> {
    fn fresh_name(&mut self, taken: &[String]) -> String {
        loop {
            let name = if self.rng.chance(self.cfg.rare_name_prob) {
                format!("q{:05x}", self.rng.next_u64() & 0xfffff)
            } else {
                zipf(&mut self.rng, COMMON_NAMES).to_string()
            };
            if !taken.contains(&name) {
                return name;
            }
        }
    }

    fn expr(&mut self, b: &mut Builder, parent: usize, scope: &mut Scope, depth: usize) {
        let roll = self.rng.unit_f64();
        if depth == 0 || roll < 0.42 {
            if let Some(name) = scope.pick(&mut self.rng) {
                if self.rng.chance(0.88) {
                    b.leaf(parent, "NameLoad", &name);
                    scope.touch(&name);
                    return;
                }
            }
            if self.rng.chance(0.75) {
                b.leaf(parent, "Num", zipf(&mut self.rng, NUM_LITERALS));
            } else {
                b.leaf(parent, "Str", zipf(&mut self.rng, STR_LITERALS));
            }
        } else if roll < 0.72 {
            let op = b.inner(parent, "BinOp");
            self.expr(b, op, scope, depth - 1);
            let kind = *self.rng.choose(BIN_OPS);
            let opnode = b.push(kind, None);
            b.attach(op, opnode);
            self.expr(b, op, scope, depth - 1);
        } else {
            let call = b.inner(parent, "Call");
            b.leaf(call, "FuncName", zipf(&mut self.rng, FUNC_NAMES));
            let args = self.rng.range(1, 2);
            for _ in 0..args {
                self.expr(b, call, scope, depth.saturating_sub(1));
            }
        }
    }

    fn condition(&mut self, b: &mut Builder, parent: usize, scope: &mut Scope) {
        let cmp = b.inner(parent, "Compare");
        self.expr(b, cmp, scope, 1);
        let kind = *self.rng.choose(CMP_OPS);
        let opnode = b.push(kind, None);
        b.attach(cmp, opnode);
        self.expr(b, cmp, scope, 1);
    }

    fn assign(&mut self, b: &mut Builder, parent: usize, scope: &mut Scope, name: String) {
        let st = b.inner(parent, "Assign");
        b.leaf(st, "NameStore", &name);
        self.expr(b, st, scope, 2);
        if !scope.vars.contains(&name) {
            scope.vars.push(name);
        } else {
            scope.touch(&name);
        }
    }

    fn statement(&mut self, b: &mut Builder, parent: usize, scope: &mut Scope, budget: &mut usize) {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let can_new = scope.vars.len() < self.cfg.max_vars;
        let roll = self.rng.unit_f64();
        if scope.vars.len() < self.cfg.min_vars || (can_new && roll < 0.22) {
            let name = self.fresh_name(&scope.vars);
            self.assign(b, parent, scope, name);
        } else if roll < 0.40 {
            if let Some(name) = scope.pick(&mut self.rng) {
                self.assign(b, parent, scope, name);
            }
        } else if roll < 0.55 {
            let st = b.inner(parent, "AugAssign");
            if let Some(name) = scope.pick(&mut self.rng) {
                b.leaf(st, "NameStore", &name);
                scope.touch(&name);
            } else {
                b.leaf(st, "NameStore", "acc");
            }
            let kind = *self.rng.choose(BIN_OPS);
            let opnode = b.push(kind, None);
            b.attach(st, opnode);
            self.expr(b, st, scope, 1);
        } else if roll < 0.70 {
            let st = b.inner(parent, "For");
            let loop_var = if can_new {
                self.fresh_name(&scope.vars)
            } else {
                scope.pick(&mut self.rng).unwrap_or_else(|| "i".into())
            };
            b.leaf(st, "NameStore", &loop_var);
            if !scope.vars.contains(&loop_var) {
                scope.vars.push(loop_var.clone());
            }
            let range = b.inner(st, "Call");
            b.leaf(range, "FuncName", "range");
            self.expr(b, range, scope, 1);
            scope.touch(&loop_var);
            let inner = self.rng.range(1, 3).min(*budget + 1);
            for _ in 0..inner {
                self.statement(b, st, scope, budget);
            }
        } else if roll < 0.82 {
            let st = b.inner(parent, "If");
            self.condition(b, st, scope);
            let inner = self.rng.range(1, 2).min(*budget + 1);
            for _ in 0..inner {
                self.statement(b, st, scope, budget);
            }
        } else if roll < 0.92 {
            let st = b.inner(parent, "ExprStmt");
            let call = b.inner(st, "Call");
            b.leaf(call, "FuncName", zipf(&mut self.rng, FUNC_NAMES));
            let args = self.rng.range(1, 2);
            for _ in 0..args {
                self.expr(b, call, scope, 1);
            }
        } else {
            let st = b.inner(parent, "Return");
            self.expr(b, st, scope, 1);
        }
    }

    fn function(&mut self, b: &mut Builder, module: usize, globals: &[String]) {
        let f = b.inner(module, "FunctionDef");
        b.leaf(f, "FuncName", zipf(&mut self.rng, FUNC_NAMES));
        let mut scope = Scope {
            vars: Vec::new(),
            globals: globals.to_vec(),
        };
        let params = self.rng.range(0, 2);
        for _ in 0..params {
            let name = self.fresh_name(&scope.vars);
            b.leaf(f, "Param", &name);
            scope.vars.push(name);
        }
        let mut budget = self.rng.range(self.cfg.min_stmts, self.cfg.max_stmts);
        while budget > 0 {
            self.statement(b, f, &mut scope, &mut budget);
        }
        // Late global reuse, typically far past the attention window.
        if !scope.globals.is_empty() && self.rng.chance(0.7) {
            let g = scope.globals[self.rng.below(scope.globals.len())].clone();
            let st = b.inner(f, "AugAssign");
            b.leaf(st, "NameStore", &g);
            let opnode = b.push("Add", None);
            b.attach(st, opnode);
            self.expr(b, st, &mut scope, 1);
        }
    }

    fn program(&mut self) -> Vec<AstNode> {
        let mut b = Builder::new();
        let module = b.push("Module", None);
        let mut globals: Vec<String> = Vec::new();
        let n_globals = self.rng.range(1, 2);
        let mut top_scope = Scope {
            vars: Vec::new(),
            globals: Vec::new(),
        };
        for _ in 0..n_globals {
            let name = self.fresh_name(&globals);
            self.assign(&mut b, module, &mut top_scope, name.clone());
            globals.push(name);
        }
        let funcs = self.rng.range(self.cfg.functions_min, self.cfg.functions_max);
        for _ in 0..funcs {
            self.function(&mut b, module, &globals);
        }
        b.nodes
    }
}

/// Generates `cfg.programs` ASTs; each program draws from an independent
/// substream of the seed, so generation order never matters.
pub fn generate(cfg: &SynthConfig) -> Vec<Vec<AstNode>> {
    let root = Rng::new(cfg.seed);
    (0..cfg.programs)
        .map(|i| {
            let mut gen = Gen {
                rng: root.substream(i as u64),
                cfg,
            };
            gen.program()
        })
        .collect()
}

#[derive(Serialize)]
struct JsonNode<'a> {
    #[serde(rename = "type")]
    type_name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    children: Option<&'a [usize]>,
}

/// Writes programs in the line-delimited JSON node-array format the
/// preprocessor reads.
pub fn write_jsonl(programs: &[Vec<AstNode>], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for prog in programs {
        let nodes: Vec<JsonNode> = prog
            .iter()
            .map(|n| JsonNode {
                type_name: &n.type_name,
                value: n.value.as_deref(),
                children: if n.children.is_empty() {
                    None
                } else {
                    Some(&n.children)
                },
            })
            .collect();
        let line = serde_json::to_string(&nodes)
            .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
