use std::sync::Arc;

use crate::climnorm::Normalizer;
use crate::error::{Error, Result};
use crate::grid::ForecastCase;
use crate::model::SequenceModel;

type ApplyFn = dyn Fn(&ForecastCase) -> Result<Vec<f64>> + Send + Sync;

/// Black-box corrector: maps a case's physical forecast `[L, lat, lon]` to
/// a corrected forecast of the same shape. The case supplies dates and
/// grid; its truth is never read.
#[derive(Clone)]
pub struct CorrectorHandle {
    pub model_id: String,
    pub causal_claim: bool,
    apply: Arc<ApplyFn>,
}

impl std::fmt::Debug for CorrectorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrectorHandle")
            .field("model_id", &self.model_id)
            .field("causal_claim", &self.causal_claim)
            .finish()
    }
}

impl CorrectorHandle {
    pub fn new(model_id: impl Into<String>, causal_claim: bool, apply: impl Fn(&ForecastCase) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        Self {
            model_id: model_id.into(),
            causal_claim,
            apply: Arc::new(apply),
        }
    }

    /// Wraps a trained sequence model with the normalization it was
    /// trained in.
    pub fn from_model<M: SequenceModel + 'static>(model_id: impl Into<String>, model: M, norm: Normalizer, causal_claim: bool) -> Self {
        Self::new(model_id, causal_claim, move |case: &ForecastCase| {
            let (lat, lon) = model.grid();
            if (case.lat, case.lon) != (lat, lon) {
                return Err(Error::dim(format!("case grid {}×{} but model grid {lat}×{lon}", case.lat, case.lon)));
            }
            norm.check_grid(lat, lon)?;
            let mut z = Vec::with_capacity(case.forecast.len());
            for t in 0..case.leads() {
                z.extend(norm.normalize_field(case.forecast_lead(t), case.valid_date(t)));
            }
            let out = model.predict(&z)?;
            norm.denormalize_forecast(case, &out)
        })
    }

    pub fn apply(&self, case: &ForecastCase) -> Result<Vec<f64>> {
        let out = (self.apply)(case)?;
        if out.len() != case.forecast.len() {
            return Err(Error::dim(format!(
                "corrector {} returned {} values for {}",
                self.model_id,
                out.len(),
                case.forecast.len()
            )));
        }
        Ok(out)
    }

    /// Case with its forecast replaced by the correction.
    pub fn correct(&self, case: &ForecastCase) -> Result<ForecastCase> {
        case.with_forecast(self.apply(case)?)
    }

    pub fn correct_all(&self, cases: &[ForecastCase]) -> Result<Vec<ForecastCase>> {
        cases.iter().map(|c| self.correct(c)).collect()
    }
}
