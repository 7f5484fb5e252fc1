//! ConvLSTM cell and spatial self-attention, as tape subgraphs and as
//! standalone tensor functions.

use crate::autodiff::{Padding, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Gate kernel `[4·C_h, C_in + C_h, k, k]` and bias `[4·C_h]`, gate blocks
/// ordered input, forget, output, candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CellParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl CellParams {
    pub fn hidden(&self) -> usize {
        self.weight.shape()[0] / 4
    }
}

/// 1×1 query/key/value projections and the output scale `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub query_weight: Tensor,
    pub query_bias: Tensor,
    pub key_weight: Tensor,
    pub key_bias: Tensor,
    pub value_weight: Tensor,
    pub value_bias: Tensor,
    pub gamma: Tensor,
}

pub(crate) struct CellVars {
    pub weight: Var,
    pub bias: Var,
}

pub(crate) struct AttentionVars {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub gamma: Var,
}

/// One ConvLSTM step on `x [C_in,H,W]`, `h, c [C_h,H,W]`.
pub(crate) fn cell_tape(tape: &mut Tape, x: Var, h: Var, c: Var, p: &CellVars, wrap: bool) -> Result<(Var, Var)> {
    let ch = tape.shape(p.weight)[0] / 4;
    if tape.shape(h)[0] != ch || tape.shape(c) != tape.shape(h) {
        return Err(Error::dim(format!(
            "cell state {:?}/{:?} does not match {ch} hidden channels",
            tape.shape(h),
            tape.shape(c)
        )));
    }
    let xh = tape.concat(&[x, h])?;
    let gates = tape.conv2d(xh, p.weight, Some(p.bias), Padding::Same, wrap)?;
    let i = tape.narrow(gates, 0, ch)?;
    let f = tape.narrow(gates, ch, ch)?;
    let o = tape.narrow(gates, 2 * ch, ch)?;
    let g = tape.narrow(gates, 3 * ch, ch)?;
    let (i, f, o, g) = (tape.sigmoid(i), tape.sigmoid(f), tape.sigmoid(o), tape.tanh(g));
    let keep = tape.mul(f, c)?;
    let write = tape.mul(i, g)?;
    let c_next = tape.add(keep, write)?;
    let squashed = tape.tanh(c_next);
    let h_next = tape.mul(o, squashed)?;
    Ok((h_next, c_next))
}

/// `h + γ·attend(h)` on `h [C,H,W]`; also returns the `[N,N]` row-stochastic
/// weight matrix, `N = H·W`.
pub(crate) fn attention_tape(tape: &mut Tape, h: Var, p: &AttentionVars, cap: usize) -> Result<(Var, Var)> {
    let s = tape.shape(h).to_vec();
    if s.len() != 3 {
        return Err(Error::dim(format!("attention expects [C,H,W], got {s:?}")));
    }
    let (c, n) = (s[0], s[1] * s[2]);
    if n > cap {
        return Err(Error::config(format!(
            "attention over {n} grid points exceeds the cap of {cap}; use a coarser grid or a tiled attention mode"
        )));
    }
    let d = tape.shape(p.wq)[0];
    let q = tape.conv2d(h, p.wq, Some(p.bq), Padding::Same, false)?;
    let k = tape.conv2d(h, p.wk, Some(p.bk), Padding::Same, false)?;
    let v = tape.conv2d(h, p.wv, Some(p.bv), Padding::Same, false)?;
    let q = tape.reshape(q, &[d, n])?;
    let k = tape.reshape(k, &[d, n])?;
    let v = tape.reshape(v, &[c, n])?;
    let scores = tape.matmul(q, k, true, false)?;
    let scores = tape.scale(scores, 1.0 / (d as f64).sqrt());
    let weights = tape.softmax(scores, 1)?;
    let attended = tape.matmul(v, weights, false, true)?;
    let attended = tape.reshape(attended, &s)?;
    let scaled = tape.mul(p.gamma, attended)?;
    Ok((tape.add(h, scaled)?, weights))
}

/// One ConvLSTM step; returns `(h_t, c_t)`.
pub fn cell_step(x: &Tensor, h_prev: &Tensor, c_prev: &Tensor, params: &CellParams, lon_wrap: bool) -> Result<(Tensor, Tensor)> {
    let mut tape = Tape::new();
    let (x, h, c) = (tape.leaf(x.clone()), tape.leaf(h_prev.clone()), tape.leaf(c_prev.clone()));
    let vars = CellVars {
        weight: tape.leaf(params.weight.clone()),
        bias: tape.leaf(params.bias.clone()),
    };
    let (h, c) = cell_tape(&mut tape, x, h, c, &vars, lon_wrap)?;
    Ok((tape.value(h).clone(), tape.value(c).clone()))
}

fn bind_attention(tape: &mut Tape, p: &AttentionParams) -> AttentionVars {
    AttentionVars {
        wq: tape.leaf(p.query_weight.clone()),
        bq: tape.leaf(p.query_bias.clone()),
        wk: tape.leaf(p.key_weight.clone()),
        bk: tape.leaf(p.key_bias.clone()),
        wv: tape.leaf(p.value_weight.clone()),
        bv: tape.leaf(p.value_bias.clone()),
        gamma: tape.leaf(p.gamma.clone()),
    }
}

/// Residual self-attention over the spatial positions of one field.
pub fn attention_apply(h: &Tensor, params: &AttentionParams, cap: usize) -> Result<Tensor> {
    Ok(attention_with_weights(h, params, cap)?.0)
}

/// Output of [`attention_apply`] together with its `[N,N]` weights.
pub fn attention_with_weights(h: &Tensor, params: &AttentionParams, cap: usize) -> Result<(Tensor, Tensor)> {
    let mut tape = Tape::new();
    let hv = tape.leaf(h.clone());
    let vars = bind_attention(&mut tape, params);
    let (y, w) = attention_tape(&mut tape, hv, &vars, cap)?;
    Ok((tape.value(y).clone(), tape.value(w).clone()))
}
