//! Every registered tape operation, checked against central finite
//! differences on random inputs (64-bit, eps 1e-5, tolerance 1e-4).

use anoncomplete::rng::Rng;
use anoncomplete::tensor::gradcheck::grad_check;
use anoncomplete::tensor::params::{ParamSet, Tensor};
use anoncomplete::tensor::tape::{Tape, ValueId};

/// Builds a ParamSet of random vectors/matrices, runs `graph` to a scalar
/// loss, and compares tape gradients with finite differences.
fn check_op(
    name: &str,
    shapes: &[(usize, usize)],
    range: (f64, f64),
    graph: impl Fn(&mut Tape<f64>, &[ValueId]) -> ValueId,
) {
    let mut rng = Rng::new(0xC0FFEE ^ name.len() as u64);
    for trial in 0..5u64 {
        let mut params: ParamSet<f64> = ParamSet::new();
        for (i, &(r, c)) in shapes.iter().enumerate() {
            let data = (0..r * c).map(|_| rng.uniform(range.0, range.1)).collect();
            params.push(format!("p{i}"), Tensor { rows: r, cols: c, data });
        }
        let analytic = {
            let mut tape: Tape<f64> = Tape::new();
            let ids = params.bind(&mut tape);
            let loss = graph(&mut tape, &ids);
            assert_eq!(tape.shape(loss), (1, 1), "{name}: loss must be scalar");
            let mut grads = tape.backward(loss);
            ids.iter()
                .map(|&id| grads.take(id).unwrap_or_default())
                .collect::<Vec<_>>()
        };
        let report = grad_check(
            &params,
            &analytic,
            |p| {
                let mut tape: Tape<f64> = Tape::new();
                let ids = p.bind(&mut tape);
                let loss = graph(&mut tape, &ids);
                tape.scalar_value(loss)
            },
            1e-5,
            None,
            trial,
        );
        assert!(
            report.max_rel_err < 1e-4,
            "{name}: max rel err {:.3e} at {:?} (trial {trial})",
            report.max_rel_err,
            report.worst
        );
    }
}

/// Sum of an arbitrary tensor into a scalar, used to close graphs.
fn close(tape: &mut Tape<f64>, x: ValueId) -> ValueId {
    tape.sum(x)
}

#[test]
fn op_add() {
    check_op("add", &[(4, 1), (4, 1)], (-2.0, 2.0), |t, p| {
        let y = t.add(p[0], p[1]);
        close(t, y)
    });
}

#[test]
fn op_mul() {
    check_op("mul", &[(4, 1), (4, 1)], (-2.0, 2.0), |t, p| {
        let y = t.mul(p[0], p[1]);
        close(t, y)
    });
}

#[test]
fn op_matmul_vec() {
    check_op("matmul_vec", &[(3, 4), (4, 1)], (-1.5, 1.5), |t, p| {
        let y = t.matmul(p[0], p[1]);
        close(t, y)
    });
}

#[test]
fn op_matmul_mat() {
    check_op("matmul_mat", &[(3, 4), (4, 2)], (-1.5, 1.5), |t, p| {
        let y = t.matmul(p[0], p[1]);
        close(t, y)
    });
}

#[test]
fn op_concat_slice() {
    check_op("concat_slice", &[(3, 1), (2, 1)], (-2.0, 2.0), |t, p| {
        let cat = t.concat(&[p[0], p[1], p[0]]);
        let sl = t.slice(cat, 2, 4);
        let sq = t.mul(sl, sl);
        close(t, sq)
    });
}

#[test]
fn op_sigmoid_tanh_softplus() {
    check_op("sig_tanh_softplus", &[(5, 1)], (-3.0, 3.0), |t, p| {
        let a = t.sigmoid(p[0]);
        let b = t.tanh(p[0]);
        let c = t.softplus(p[0]);
        let ab = t.mul(a, b);
        let abc = t.add(ab, c);
        close(t, abc)
    });
}

#[test]
fn op_softmax() {
    check_op("softmax", &[(6, 1), (6, 1)], (-2.0, 2.0), |t, p| {
        let sm = t.softmax(p[0]);
        // Weighted so every softmax coordinate matters.
        let w = t.mul(sm, p[1]);
        close(t, w)
    });
}

#[test]
fn op_log_scale_neg_addconst() {
    check_op("log_scale_neg", &[(4, 1)], (0.3, 3.0), |t, p| {
        let l = t.log(p[0]);
        let s = t.scale(l, 0.7);
        let n = t.neg(s);
        let a = t.add_const(n, 1.5);
        close(t, a)
    });
}

#[test]
fn op_dot() {
    check_op("dot", &[(5, 1), (5, 1)], (-2.0, 2.0), |t, p| t.dot(p[0], p[1]));
}

#[test]
fn op_embed_row() {
    check_op("embed_row", &[(4, 3), (3, 1)], (-2.0, 2.0), |t, p| {
        let r1 = t.embed_row(p[0], 1);
        let r3 = t.embed_row(p[0], 3);
        let s = t.add(r1, r3);
        t.dot(s, p[1])
    });
}

#[test]
fn op_dot_stack() {
    check_op("dot_stack", &[(3, 1), (3, 1), (3, 1), (3, 1)], (-2.0, 2.0), |t, p| {
        // Repeated rows must accumulate gradients.
        let y = t.dot_stack(&[p[0], p[1], p[2], p[0]], p[3]);
        let w = t.softmax(y);
        let lw = t.log(w);
        close(t, lw)
    });
}

#[test]
fn op_attn_scores_weighted_sum() {
    check_op(
        "attention",
        &[(4, 1), (4, 1), (4, 1), (4, 1), (3, 1)],
        (-1.0, 1.0),
        |t, p| {
            let keys = [p[0], p[1]];
            let scores = t.attn_scores(&keys, p[2], p[3]);
            let alpha = t.softmax(scores);
            let ctx = t.weighted_sum(alpha, &[p[0], p[1]]);
            let first3 = t.slice(ctx, 0, 3);
            t.dot(first3, p[4])
        },
    );
}

#[test]
fn op_switch_merge() {
    check_op("switch_merge", &[(4, 1), (3, 1), (1, 1), (7, 1)], (-2.0, 2.0), |t, p| {
        let w = t.softmax(p[0]);
        let l = t.softmax(p[1]);
        let g = t.sigmoid(p[2]);
        let merged = t.switch_merge(w, l, g);
        let weighted = t.mul(merged, p[3]);
        close(t, weighted)
    });
}

#[test]
fn op_log_softmax_nll() {
    check_op("log_softmax_nll", &[(6, 1)], (-2.0, 2.0), |t, p| {
        t.log_softmax_nll(p[0], 2)
    });
}

#[test]
fn op_min2_sum_list() {
    check_op("min2_sum_list", &[(1, 1), (1, 1), (1, 1)], (-2.0, 2.0), |t, p| {
        // Perturbations are 1e-5, so keep operands separated to avoid
        // crossing the min at the kink.
        let shifted = t.add_const(p[1], 3.0);
        let m = t.min2(p[0], shifted);
        t.sum_list(&[m, p[2]])
    });
}

#[test]
fn softmax_rows_are_distributions() {
    let mut rng = Rng::new(5);
    for _ in 0..50 {
        let mut tape: Tape<f64> = Tape::new();
        let n = 2 + rng.below(12);
        let data: Vec<f64> = (0..n).map(|_| rng.uniform(-30.0, 30.0)).collect();
        let x = tape.leaf_vec(data, false);
        let y = tape.softmax(x);
        let vals = tape.value(y);
        assert!(vals.iter().all(|&v| v >= 0.0));
        let sum: f64 = vals.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
}
