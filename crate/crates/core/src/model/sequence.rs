use crate::autodiff::{BatchNormStats, BnMode, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// A trainable corrector mapping a normalized forecast sequence
/// `[L, lat, lon]` to a corrected sequence of the same shape.
pub trait SequenceModel: Clone + Send + Sync {
    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    fn grid(&self) -> (usize, usize);

    /// Fixed lead count for models whose input width depends on it.
    fn fixed_leads(&self) -> Option<usize> {
        None
    }

    /// Records the forward pass for each `[L, lat, lon]` input on `tape`.
    /// In train mode also returns the updated batchnorm statistics, which
    /// the caller commits with [`SequenceModel::set_running_stats`].
    fn forward_batch(&self, tape: &mut Tape, inputs: &[Var], mode: BnMode) -> Result<(Vec<Var>, Option<BatchNormStats>)>;

    fn set_running_stats(&mut self, stats: BatchNormStats);

    /// Inference on one normalized sequence, row-major `[L, lat, lon]`.
    fn predict(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (lat, lon) = self.grid();
        let n = lat * lon;
        if z.is_empty() || !z.len().is_multiple_of(n) {
            return Err(Error::dim(format!("{} values do not form leads of a {lat}×{lon} grid", z.len())));
        }
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![z.len() / n, lat, lon], z.to_vec())?);
        let (out, _) = self.forward_batch(&mut tape, &[x], BnMode::Infer)?;
        Ok(tape.value(out[0]).data().to_vec())
    }
}
