//! Central finite-difference checks against tape gradients.

use super::{ParamStore, Tape, Tensor, Var};
use crate::error::Result;

/// Magnitude below which gradient components are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, REL_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares tape gradients of a scalar function against central
/// differences with step `h`, perturbing every element of every input.
///
/// `build` must construct the same scalar graph from the given leaves each
/// time it is called. Returns the maximum relative error seen.
pub fn max_relative_error<F>(inputs: &[Tensor], h: f64, build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |ins: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ins.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut worst: f64 = 0.0;
    let mut probe = inputs.to_vec();
    for (which, var) in vars.iter().enumerate() {
        let analytic = grads
            .wrt(*var)
            .unwrap_or_else(|| Tensor::zeros(inputs[which].shape()));
        for k in 0..inputs[which].len() {
            let orig = inputs[which].data()[k];
            probe[which].data_mut()[k] = orig + h;
            let plus = eval(&probe)?;
            probe[which].data_mut()[k] = orig - h;
            let minus = eval(&probe)?;
            probe[which].data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(analytic.data()[k], numeric));
        }
    }
    Ok(worst)
}

/// Like [`max_relative_error`] but over every scalar of a parameter store;
/// `build` records the loss reading parameters from the given store.
pub fn max_param_relative_error<F>(store: &ParamStore, h: f64, build: F) -> Result<f64>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let out = build(s, &mut tape)?;
        Ok(tape.value(out).data()[0])
    };
    let mut tape = Tape::new();
    let out = build(store, &mut tape)?;
    let analytic = tape.backward(out)?.params(store);

    let mut worst: f64 = 0.0;
    let mut probe = store.clone();
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for (id, grad) in ids.into_iter().zip(&analytic) {
        for k in 0..grad.len() {
            let orig = store.value(id).data()[k];
            probe.apply_update(id, |v| v[k] = orig + h);
            let plus = eval(&probe)?;
            probe.apply_update(id, |v| v[k] = orig - h);
            let minus = eval(&probe)?;
            probe.apply_update(id, |v| v[k] = orig);
            worst = worst.max(relative_error(grad.data()[k], (plus - minus) / (2.0 * h)));
        }
    }
    Ok(worst)
}
