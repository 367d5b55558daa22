use crate::tensor::scalar::Scalar;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValueId(u32);

impl ValueId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(ValueId, ValueId),
    Mul(ValueId, ValueId),
    MatMul(ValueId, ValueId),
    Concat(Vec<ValueId>),
    Slice { src: ValueId, start: usize },
    Sigmoid(ValueId),
    Tanh(ValueId),
    Softmax(ValueId),
    Softplus(ValueId),
    Log(ValueId),
    Neg(ValueId),
    Scale(ValueId, f64),
    AddConst(ValueId),
    Sum(ValueId),
    Dot(ValueId, ValueId),
    EmbedRow { table: ValueId, row: usize },
    /// y_j = rows[j] . x
    DotStack { rows: Vec<ValueId>, x: ValueId },
    /// s_j = v . tanh(keys[j] + query)
    AttnScores { keys: Vec<ValueId>, query: ValueId, v: ValueId },
    /// c = sum_j weights[j] * items[j]
    WeightedSum { weights: ValueId, items: Vec<ValueId> },
    /// [g*vocab ; (1-g)*ptr] with g a scalar probability
    SwitchMerge { vocab: ValueId, ptr: ValueId, gate: ValueId },
    /// -log softmax(x)[idx]
    LogSoftmaxNll { x: ValueId, idx: usize },
    Min2(ValueId, ValueId),
    SumList(Vec<ValueId>),
}

struct Node<S> {
    op: Op,
    value: Vec<S>,
    rows: usize,
    cols: usize,
    requires_grad: bool,
}

/// Records a forward computation over dense row-major tensors and replays
/// it in reverse to accumulate gradients. One tape per worker; a tape is
/// rebuilt per chunk because the dynamic-embedding recurrence wires a
/// data-dependent graph.
pub struct Tape<S: Scalar> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Vec<S>, rows: usize, cols: usize, requires: bool) -> ValueId {
        debug_assert_eq!(value.len(), rows * cols);
        let id = ValueId(self.nodes.len() as u32);
        self.nodes.push(Node {
            op,
            value,
            rows,
            cols,
            requires_grad: requires,
        });
        id
    }

    fn requires(&self, id: ValueId) -> bool {
        self.nodes[id.index()].requires_grad
    }

    pub fn value(&self, id: ValueId) -> &[S] {
        &self.nodes[id.index()].value
    }

    pub fn scalar_value(&self, id: ValueId) -> S {
        debug_assert_eq!(self.nodes[id.index()].value.len(), 1);
        self.nodes[id.index()].value[0]
    }

    pub fn shape(&self, id: ValueId) -> (usize, usize) {
        let n = &self.nodes[id.index()];
        (n.rows, n.cols)
    }

    /// Scans every recorded value for NaN/Inf; returns the first offender.
    pub fn first_non_finite(&self) -> Option<ValueId> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.value.iter().any(|x| !x.is_finite()) {
                return Some(ValueId(i as u32));
            }
        }
        None
    }

    // ---- leaves ----

    pub fn leaf_matrix(&mut self, value: Vec<S>, rows: usize, cols: usize, grad: bool) -> ValueId {
        assert_eq!(value.len(), rows * cols, "leaf data does not match shape");
        self.push(Op::Leaf, value, rows, cols, grad)
    }

    pub fn leaf_vec(&mut self, value: Vec<S>, grad: bool) -> ValueId {
        let n = value.len();
        self.push(Op::Leaf, value, n, 1, grad)
    }

    pub fn leaf_scalar(&mut self, value: S, grad: bool) -> ValueId {
        self.push(Op::Leaf, vec![value], 1, 1, grad)
    }

    pub fn zeros_vec(&mut self, n: usize) -> ValueId {
        self.push(Op::Leaf, vec![S::ZERO; n], n, 1, false)
    }

    // ---- elementwise and linear ops ----

    pub fn add(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        assert_eq!((ra, ca), (rb, cb), "add: shape mismatch");
        let value = self.nodes[a.index()]
            .value
            .iter()
            .zip(&self.nodes[b.index()].value)
            .map(|(&x, &y)| x + y)
            .collect();
        let req = self.requires(a) || self.requires(b);
        self.push(Op::Add(a, b), value, ra, ca, req)
    }

    pub fn mul(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (ra, ca) = self.shape(a);
        assert_eq!((ra, ca), self.shape(b), "mul: shape mismatch");
        let value = self.nodes[a.index()]
            .value
            .iter()
            .zip(&self.nodes[b.index()].value)
            .map(|(&x, &y)| x * y)
            .collect();
        let req = self.requires(a) || self.requires(b);
        self.push(Op::Mul(a, b), value, ra, ca, req)
    }

    /// (m x n) . (n x p) -> (m x p); vectors are n x 1.
    pub fn matmul(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (m, n) = self.shape(a);
        let (n2, p) = self.shape(b);
        assert_eq!(n, n2, "matmul: inner dimensions {n} vs {n2}");
        let av = &self.nodes[a.index()].value;
        let bv = &self.nodes[b.index()].value;
        let mut out = vec![S::ZERO; m * p];
        if p == 1 {
            for i in 0..m {
                let row = &av[i * n..(i + 1) * n];
                let mut acc = S::ZERO;
                for (x, y) in row.iter().zip(bv.iter()) {
                    acc += *x * *y;
                }
                out[i] = acc;
            }
        } else {
            for i in 0..m {
                for k in 0..n {
                    let aik = av[i * n + k];
                    let brow = &bv[k * p..(k + 1) * p];
                    let orow = &mut out[i * p..(i + 1) * p];
                    for (o, &x) in orow.iter_mut().zip(brow.iter()) {
                        *o += aik * x;
                    }
                }
            }
        }
        let req = self.requires(a) || self.requires(b);
        self.push(Op::MatMul(a, b), out, m, p, req)
    }

    pub fn concat(&mut self, parts: &[ValueId]) -> ValueId {
        let mut value = Vec::new();
        let mut req = false;
        for &p in parts {
            let (_, c) = self.shape(p);
            assert_eq!(c, 1, "concat expects vectors");
            value.extend_from_slice(&self.nodes[p.index()].value);
            req |= self.requires(p);
        }
        let n = value.len();
        self.push(Op::Concat(parts.to_vec()), value, n, 1, req)
    }

    pub fn slice(&mut self, src: ValueId, start: usize, len: usize) -> ValueId {
        let (r, c) = self.shape(src);
        assert_eq!(c, 1, "slice expects a vector");
        assert!(start + len <= r, "slice out of bounds");
        let value = self.nodes[src.index()].value[start..start + len].to_vec();
        let req = self.requires(src);
        self.push(Op::Slice { src, start }, value, len, 1, req)
    }

    fn unary(&mut self, src: ValueId, op: Op, f: impl Fn(S) -> S) -> ValueId {
        let (r, c) = self.shape(src);
        let value = self.nodes[src.index()].value.iter().map(|&x| f(x)).collect();
        let req = self.requires(src);
        self.push(op, value, r, c, req)
    }

    pub fn sigmoid(&mut self, x: ValueId) -> ValueId {
        self.unary(x, Op::Sigmoid(x), Scalar::sigmoid)
    }

    pub fn tanh(&mut self, x: ValueId) -> ValueId {
        self.unary(x, Op::Tanh(x), Scalar::tanh)
    }

    pub fn softplus(&mut self, x: ValueId) -> ValueId {
        self.unary(x, Op::Softplus(x), Scalar::softplus)
    }

    pub fn log(&mut self, x: ValueId) -> ValueId {
        self.unary(x, Op::Log(x), Scalar::ln)
    }

    pub fn neg(&mut self, x: ValueId) -> ValueId {
        self.unary(x, Op::Neg(x), |v| -v)
    }

    pub fn scale(&mut self, x: ValueId, c: f64) -> ValueId {
        self.unary(x, Op::Scale(x, c), |v| v * S::from_f64(c))
    }

    pub fn add_const(&mut self, x: ValueId, c: f64) -> ValueId {
        self.unary(x, Op::AddConst(x), |v| v + S::from_f64(c))
    }

    pub fn softmax(&mut self, x: ValueId) -> ValueId {
        let (r, c) = self.shape(x);
        assert_eq!(c, 1, "softmax expects a vector");
        let value = softmax_values(&self.nodes[x.index()].value);
        let req = self.requires(x);
        self.push(Op::Softmax(x), value, r, 1, req)
    }

    pub fn sum(&mut self, x: ValueId) -> ValueId {
        let mut acc = S::ZERO;
        for &v in &self.nodes[x.index()].value {
            acc += v;
        }
        let req = self.requires(x);
        self.push(Op::Sum(x), vec![acc], 1, 1, req)
    }

    pub fn dot(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (ra, _) = self.shape(a);
        let (rb, _) = self.shape(b);
        assert_eq!(ra, rb, "dot: length mismatch");
        let mut acc = S::ZERO;
        for (x, y) in self.nodes[a.index()]
            .value
            .iter()
            .zip(&self.nodes[b.index()].value)
        {
            acc += *x * *y;
        }
        let req = self.requires(a) || self.requires(b);
        self.push(Op::Dot(a, b), vec![acc], 1, 1, req)
    }

    /// Row `row` of a (rows x cols) table as a column vector. Backward
    /// scatters only into that row.
    pub fn embed_row(&mut self, table: ValueId, row: usize) -> ValueId {
        let (r, c) = self.shape(table);
        assert!(row < r, "embedding row {row} out of range {r}");
        let value = self.nodes[table.index()].value[row * c..(row + 1) * c].to_vec();
        let req = self.requires(table);
        self.push(Op::EmbedRow { table, row }, value, c, 1, req)
    }

    /// y_j = rows[j] . x for each j; rows may repeat ids (gradients sum).
    pub fn dot_stack(&mut self, rows: &[ValueId], x: ValueId) -> ValueId {
        let (n, _) = self.shape(x);
        let xv = &self.nodes[x.index()].value;
        let mut value = Vec::with_capacity(rows.len());
        let mut req = self.requires(x);
        for &r in rows {
            let (rn, _) = self.shape(r);
            assert_eq!(rn, n, "dot_stack: row length mismatch");
            let mut acc = S::ZERO;
            for (a, b) in self.nodes[r.index()].value.iter().zip(xv.iter()) {
                acc += *a * *b;
            }
            value.push(acc);
            req |= self.requires(r);
        }
        let m = value.len();
        self.push(
            Op::DotStack {
                rows: rows.to_vec(),
                x,
            },
            value,
            m,
            1,
            req,
        )
    }

    /// Additive attention scores s_j = v . tanh(keys[j] + query).
    pub fn attn_scores(&mut self, keys: &[ValueId], query: ValueId, v: ValueId) -> ValueId {
        let (d, _) = self.shape(query);
        assert_eq!(self.shape(v).0, d, "attn_scores: v dimension mismatch");
        let qv = &self.nodes[query.index()].value;
        let vv = &self.nodes[v.index()].value;
        let mut value = Vec::with_capacity(keys.len());
        let mut req = self.requires(query) || self.requires(v);
        for &k in keys {
            assert_eq!(self.shape(k).0, d, "attn_scores: key dimension mismatch");
            let kv = &self.nodes[k.index()].value;
            let mut acc = S::ZERO;
            for i in 0..d {
                acc += vv[i] * (kv[i] + qv[i]).tanh();
            }
            value.push(acc);
            req |= self.requires(k);
        }
        let m = value.len();
        self.push(
            Op::AttnScores {
                keys: keys.to_vec(),
                query,
                v,
            },
            value,
            m,
            1,
            req,
        )
    }

    /// Context vector sum_j weights[j] * items[j].
    pub fn weighted_sum(&mut self, weights: ValueId, items: &[ValueId]) -> ValueId {
        let (m, _) = self.shape(weights);
        assert_eq!(m, items.len(), "weighted_sum: arity mismatch");
        assert!(!items.is_empty(), "weighted_sum: empty item list");
        let (d, _) = self.shape(items[0]);
        let wv = &self.nodes[weights.index()].value;
        let mut value = vec![S::ZERO; d];
        let mut req = self.requires(weights);
        for (j, &it) in items.iter().enumerate() {
            assert_eq!(self.shape(it).0, d, "weighted_sum: item dimension mismatch");
            let iv = &self.nodes[it.index()].value;
            for i in 0..d {
                value[i] += wv[j] * iv[i];
            }
            req |= self.requires(it);
        }
        self.push(
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
            value,
            d,
            1,
            req,
        )
    }

    /// Merged prediction distribution [g*vocab ; (1-g)*ptr].
    pub fn switch_merge(&mut self, vocab: ValueId, ptr: ValueId, gate: ValueId) -> ValueId {
        let (nv, _) = self.shape(vocab);
        let (np, _) = self.shape(ptr);
        assert_eq!(self.shape(gate), (1, 1), "switch gate must be scalar");
        let g = self.nodes[gate.index()].value[0];
        let mut value = Vec::with_capacity(nv + np);
        for &w in &self.nodes[vocab.index()].value {
            value.push(g * w);
        }
        for &l in &self.nodes[ptr.index()].value {
            value.push((S::ONE - g) * l);
        }
        let req = self.requires(vocab) || self.requires(ptr) || self.requires(gate);
        self.push(Op::SwitchMerge { vocab, ptr, gate }, value, nv + np, 1, req)
    }

    /// Scalar -log softmax(x)[idx], numerically stable.
    pub fn log_softmax_nll(&mut self, x: ValueId, idx: usize) -> ValueId {
        let (r, c) = self.shape(x);
        assert_eq!(c, 1, "log_softmax_nll expects a vector");
        assert!(idx < r, "target index out of range");
        let xs = &self.nodes[x.index()].value;
        let mut m = xs[0];
        for &v in xs.iter() {
            m = m.max_val(v);
        }
        let mut z = S::ZERO;
        for &v in xs.iter() {
            z += (v - m).exp();
        }
        let lse = m + z.ln();
        let value = lse - xs[idx];
        let req = self.requires(x);
        self.push(Op::LogSoftmaxNll { x, idx }, vec![value], 1, 1, req)
    }

    /// Smaller of two scalars; ties choose the first. Backward routes the
    /// gradient only into the chosen side.
    pub fn min2(&mut self, a: ValueId, b: ValueId) -> ValueId {
        assert_eq!(self.shape(a), (1, 1));
        assert_eq!(self.shape(b), (1, 1));
        let av = self.nodes[a.index()].value[0];
        let bv = self.nodes[b.index()].value[0];
        let value = if av <= bv { av } else { bv };
        let req = self.requires(a) || self.requires(b);
        self.push(Op::Min2(a, b), vec![value], 1, 1, req)
    }

    pub fn sum_list(&mut self, items: &[ValueId]) -> ValueId {
        let mut acc = S::ZERO;
        let mut req = false;
        for &it in items {
            assert_eq!(self.shape(it), (1, 1), "sum_list expects scalars");
            acc += self.nodes[it.index()].value[0];
            req |= self.requires(it);
        }
        self.push(Op::SumList(items.to_vec()), vec![acc], 1, 1, req)
    }

    // ---- backward ----

    /// Reverse pass from a scalar loss. Gradients accumulate additively
    /// into every node that requires them, visiting operations in exact
    /// reverse recording order.
    pub fn backward(&self, loss: ValueId) -> Gradients<S> {
        assert_eq!(self.shape(loss), (1, 1), "backward expects a scalar loss");
        let mut grads: Vec<Option<Vec<S>>> = vec![None; self.nodes.len()];
        grads[loss.index()] = Some(vec![S::ONE]);

        for i in (0..self.nodes.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, |ga| add_assign(ga, &g));
                    self.accumulate(&mut grads, *b, |gb| add_assign(gb, &g));
                }
                Op::Mul(a, b) => {
                    let av = &self.nodes[a.index()].value;
                    let bv = &self.nodes[b.index()].value;
                    self.accumulate(&mut grads, *a, |ga| {
                        for (k, gk) in ga.iter_mut().enumerate() {
                            *gk += g[k] * bv[k];
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for (k, gk) in gb.iter_mut().enumerate() {
                            *gk += g[k] * av[k];
                        }
                    });
                }
                Op::MatMul(a, b) => {
                    let (m, n) = self.shape(*a);
                    let (_, p) = self.shape(*b);
                    let av = &self.nodes[a.index()].value;
                    let bv = &self.nodes[b.index()].value;
                    // dA = g . B^T, dB = A^T . g
                    self.accumulate(&mut grads, *a, |ga| {
                        for ii in 0..m {
                            for kk in 0..n {
                                let mut acc = S::ZERO;
                                for jj in 0..p {
                                    acc += g[ii * p + jj] * bv[kk * p + jj];
                                }
                                ga[ii * n + kk] += acc;
                            }
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for kk in 0..n {
                            for jj in 0..p {
                                let mut acc = S::ZERO;
                                for ii in 0..m {
                                    acc += av[ii * n + kk] * g[ii * p + jj];
                                }
                                gb[kk * p + jj] += acc;
                            }
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (len, _) = self.shape(p);
                        self.accumulate(&mut grads, p, |gp| {
                            for k in 0..len {
                                gp[k] += g[off + k];
                            }
                        });
                        off += len;
                    }
                }
                Op::Slice { src, start } => {
                    let start = *start;
                    self.accumulate(&mut grads, *src, |gs| {
                        for (k, &gv) in g.iter().enumerate() {
                            gs[start + k] += gv;
                        }
                    });
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..y.len() {
                            gx[k] += g[k] * y[k] * (S::ONE - y[k]);
                        }
                    });
                }
                Op::Tanh(x) => {
                    let y = &node.value;
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..y.len() {
                            gx[k] += g[k] * (S::ONE - y[k] * y[k]);
                        }
                    });
                }
                Op::Softplus(x) => {
                    let xv = &self.nodes[x.index()].value;
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..xv.len() {
                            gx[k] += g[k] * xv[k].sigmoid();
                        }
                    });
                }
                Op::Log(x) => {
                    let xv = &self.nodes[x.index()].value;
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..xv.len() {
                            gx[k] += g[k] / xv[k];
                        }
                    });
                }
                Op::Neg(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for (k, gk) in gx.iter_mut().enumerate() {
                            *gk += -g[k];
                        }
                    });
                }
                Op::Scale(x, c) => {
                    let c = S::from_f64(*c);
                    self.accumulate(&mut grads, *x, |gx| {
                        for (k, gk) in gx.iter_mut().enumerate() {
                            *gk += g[k] * c;
                        }
                    });
                }
                Op::AddConst(x) => {
                    self.accumulate(&mut grads, *x, |gx| add_assign(gx, &g));
                }
                Op::Softmax(x) => {
                    let y = &node.value;
                    let mut dot = S::ZERO;
                    for k in 0..y.len() {
                        dot += g[k] * y[k];
                    }
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..y.len() {
                            gx[k] += y[k] * (g[k] - dot);
                        }
                    });
                }
                Op::Sum(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for gk in gx.iter_mut() {
                            *gk += g[0];
                        }
                    });
                }
                Op::Dot(a, b) => {
                    let av = &self.nodes[a.index()].value;
                    let bv = &self.nodes[b.index()].value;
                    self.accumulate(&mut grads, *a, |ga| {
                        for (k, gk) in ga.iter_mut().enumerate() {
                            *gk += g[0] * bv[k];
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for (k, gk) in gb.iter_mut().enumerate() {
                            *gk += g[0] * av[k];
                        }
                    });
                }
                Op::EmbedRow { table, row } => {
                    let cols = self.shape(*table).1;
                    let row = *row;
                    self.accumulate(&mut grads, *table, |gt| {
                        for k in 0..cols {
                            gt[row * cols + k] += g[k];
                        }
                    });
                }
                Op::DotStack { rows, x } => {
                    let xv = &self.nodes[x.index()].value;
                    for (j, &r) in rows.iter().enumerate() {
                        self.accumulate(&mut grads, r, |gr| {
                            for (k, gk) in gr.iter_mut().enumerate() {
                                *gk += g[j] * xv[k];
                            }
                        });
                    }
                    self.accumulate(&mut grads, *x, |gx| {
                        for (j, &r) in rows.iter().enumerate() {
                            let rv = &self.nodes[r.index()].value;
                            for (k, gk) in gx.iter_mut().enumerate() {
                                *gk += g[j] * rv[k];
                            }
                        }
                    });
                }
                Op::AttnScores { keys, query, v } => {
                    let qv = &self.nodes[query.index()].value;
                    let vv = &self.nodes[v.index()].value;
                    let d = qv.len();
                    let mut dv = vec![S::ZERO; d];
                    let mut dq = vec![S::ZERO; d];
                    for (j, &k) in keys.iter().enumerate() {
                        let kv = &self.nodes[k.index()].value;
                        let gj = g[j];
                        self.accumulate(&mut grads, k, |gk| {
                            for i in 0..d {
                                let t = (kv[i] + qv[i]).tanh();
                                let dpre = gj * vv[i] * (S::ONE - t * t);
                                dv[i] += gj * t;
                                dq[i] += dpre;
                                gk[i] += dpre;
                            }
                        });
                        if !self.requires(k) {
                            // Still need dv/dq contributions from constant keys.
                            for i in 0..d {
                                let t = (kv[i] + qv[i]).tanh();
                                dv[i] += gj * t;
                                dq[i] += gj * vv[i] * (S::ONE - t * t);
                            }
                        }
                    }
                    self.accumulate(&mut grads, *v, |gv| add_assign(gv, &dv));
                    self.accumulate(&mut grads, *query, |gq| add_assign(gq, &dq));
                }
                Op::WeightedSum { weights, items } => {
                    let wv = &self.nodes[weights.index()].value;
                    self.accumulate(&mut grads, *weights, |gw| {
                        for (j, &it) in items.iter().enumerate() {
                            let iv = &self.nodes[it.index()].value;
                            let mut acc = S::ZERO;
                            for k in 0..iv.len() {
                                acc += g[k] * iv[k];
                            }
                            gw[j] += acc;
                        }
                    });
                    for (j, &it) in items.iter().enumerate() {
                        self.accumulate(&mut grads, it, |gi| {
                            for (k, gk) in gi.iter_mut().enumerate() {
                                *gk += wv[j] * g[k];
                            }
                        });
                    }
                }
                Op::SwitchMerge { vocab, ptr, gate } => {
                    let nv = self.shape(*vocab).0;
                    let gv = self.nodes[gate.index()].value[0];
                    let wv = &self.nodes[vocab.index()].value;
                    let lv = &self.nodes[ptr.index()].value;
                    self.accumulate(&mut grads, *vocab, |gw| {
                        for (k, gk) in gw.iter_mut().enumerate() {
                            *gk += g[k] * gv;
                        }
                    });
                    self.accumulate(&mut grads, *ptr, |gl| {
                        for (k, gk) in gl.iter_mut().enumerate() {
                            *gk += g[nv + k] * (S::ONE - gv);
                        }
                    });
                    self.accumulate(&mut grads, *gate, |gg| {
                        let mut acc = S::ZERO;
                        for k in 0..nv {
                            acc += g[k] * wv[k];
                        }
                        for k in 0..lv.len() {
                            acc += -(g[nv + k] * lv[k]);
                        }
                        gg[0] += acc;
                    });
                }
                Op::LogSoftmaxNll { x, idx } => {
                    let xs = &self.nodes[x.index()].value;
                    let probs = softmax_values(xs);
                    let idx = *idx;
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..probs.len() {
                            let delta = if k == idx { S::ONE } else { S::ZERO };
                            gx[k] += g[0] * (probs[k] - delta);
                        }
                    });
                }
                Op::Min2(a, b) => {
                    let av = self.nodes[a.index()].value[0];
                    let bv = self.nodes[b.index()].value[0];
                    let chosen = if av <= bv { *a } else { *b };
                    self.accumulate(&mut grads, chosen, |gc| gc[0] += g[0]);
                }
                Op::SumList(items) => {
                    for &it in items {
                        self.accumulate(&mut grads, it, |gi| gi[0] += g[0]);
                    }
                }
            }
        }

        // Leaves keep their accumulated gradients; everything else was
        // consumed during the sweep above.
        Gradients { grads }
    }

    fn accumulate(
        &self,
        grads: &mut [Option<Vec<S>>],
        id: ValueId,
        f: impl FnOnce(&mut Vec<S>),
    ) {
        if !self.requires(id) {
            return;
        }
        let slot = &mut grads[id.index()];
        if slot.is_none() {
            let n = &self.nodes[id.index()];
            *slot = Some(vec![S::ZERO; n.rows * n.cols]);
        }
        f(slot.as_mut().unwrap());
    }
}

fn add_assign<S: Scalar>(dst: &mut [S], src: &[S]) {
    for (d, &s) in dst.iter_mut().zip(src.iter()) {
        *d += s;
    }
}

fn softmax_values<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut m = xs[0];
    for &v in xs.iter() {
        m = m.max_val(v);
    }
    let mut out: Vec<S> = xs.iter().map(|&v| (v - m).exp()).collect();
    let mut z = S::ZERO;
    for &v in &out {
        z += v;
    }
    for v in &mut out {
        *v = *v / z;
    }
    out
}

/// Gradient accumulators keyed by tape value; only leaves requested with
/// `grad = true` retain entries after a backward pass.
pub struct Gradients<S> {
    grads: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, id: ValueId) -> Option<&[S]> {
        self.grads.get(id.index()).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, id: ValueId) -> Option<Vec<S>> {
        self.grads.get_mut(id.index()).and_then(Option::take)
    }
}
