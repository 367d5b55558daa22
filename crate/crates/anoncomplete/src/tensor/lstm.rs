use crate::error::{Error, Result};
use crate::tensor::scalar::Scalar;
use crate::tensor::tape::{Tape, ValueId};

/// Tape handles for one LSTM's parameters: input weights (4H x In), state
/// weights (4H x H) and bias (4H). Gate order is input, forget, candidate,
/// output.
#[derive(Debug, Clone, Copy)]
pub struct LstmIds {
    pub w_x: ValueId,
    pub w_h: ValueId,
    pub b: ValueId,
}

/// One step of a standard LSTM cell on the tape.
///
/// i = sig(Wx x + Wh h + b)[0H..1H]   f = ..[1H..2H]
/// g = tanh(..)[2H..3H]               o = sig(..)[3H..4H]
/// c' = f*c + i*g                     h' = o * tanh(c')
pub fn lstm_cell<S: Scalar>(
    tape: &mut Tape<S>,
    input: ValueId,
    h: ValueId,
    c: ValueId,
    p: &LstmIds,
) -> Result<(ValueId, ValueId)> {
    let (four_h, in_dim) = tape.shape(p.w_x);
    let hidden = four_h / 4;
    let shape_err = |msg: String| Error::Shape {
        op: "lstm_cell",
        msg,
    };
    if four_h != 4 * hidden || hidden == 0 {
        return Err(shape_err(format!("w_x rows {four_h} not a multiple of 4")));
    }
    if tape.shape(input).0 != in_dim {
        return Err(shape_err(format!(
            "input dim {} vs w_x cols {in_dim}",
            tape.shape(input).0
        )));
    }
    if tape.shape(p.w_h) != (four_h, hidden) {
        return Err(shape_err(format!(
            "w_h shape {:?}, expected ({four_h}, {hidden})",
            tape.shape(p.w_h)
        )));
    }
    if tape.shape(h).0 != hidden || tape.shape(c).0 != hidden {
        return Err(shape_err(format!(
            "state dims {}/{} vs hidden {hidden}",
            tape.shape(h).0,
            tape.shape(c).0
        )));
    }
    if tape.shape(p.b).0 != four_h {
        return Err(shape_err(format!(
            "bias dim {} vs {four_h}",
            tape.shape(p.b).0
        )));
    }

    let xw = tape.matmul(p.w_x, input);
    let hw = tape.matmul(p.w_h, h);
    let pre0 = tape.add(xw, hw);
    let pre = tape.add(pre0, p.b);

    let i_pre = tape.slice(pre, 0, hidden);
    let f_pre = tape.slice(pre, hidden, hidden);
    let g_pre = tape.slice(pre, 2 * hidden, hidden);
    let o_pre = tape.slice(pre, 3 * hidden, hidden);

    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let g = tape.tanh(g_pre);
    let o = tape.sigmoid(o_pre);

    let fc = tape.mul(f, c);
    let ig = tape.mul(i, g);
    let c_new = tape.add(fc, ig);
    let c_act = tape.tanh(c_new);
    let h_new = tape.mul(o, c_act);
    Ok((h_new, c_new))
}
