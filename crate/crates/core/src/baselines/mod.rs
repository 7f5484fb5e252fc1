//! Reference correctors: raw passthrough, gridwise linear regression and
//! a deliberately acausal lead-stacked convolution.

pub mod acausal;
pub mod linear;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use acausal::{AcausalConfig, AcausalModel};
pub use linear::GridwiseLinear;

use crate::audit::CorrectorHandle;
use crate::autodiff::{ParamStore, Tensor};
use crate::climnorm::{NormSpec, Normalizer};
use crate::error::{Error, Result};
use crate::model::checkpoint::{decode_container, encode_container};
use crate::model::{SequenceModel, TrainingRecord};

pub const BASELINE_MAGIC: &[u8; 4] = b"BASL";

pub const RAW_ID: &str = "raw";
pub const LINEAR_ID: &str = "gridwise-linear";
pub const ACAUSAL_ID: &str = "acausal-conv";

/// Returns the forecast unchanged.
pub fn raw_passthrough() -> CorrectorHandle {
    CorrectorHandle::new(RAW_ID, true, |case| Ok(case.forecast.clone()))
}

pub fn linear_handle(model: GridwiseLinear) -> CorrectorHandle {
    CorrectorHandle::new(LINEAR_ID, true, move |case| model.apply(case))
}

pub fn acausal_handle(model: AcausalModel, norm: Normalizer) -> CorrectorHandle {
    CorrectorHandle::from_model(ACAUSAL_ID, model, norm, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Header {
    GridwiseLinear {
        variable: String,
        leads: usize,
        lat: usize,
        lon: usize,
        degenerate: usize,
    },
    AcausalConv {
        variable: String,
        config: AcausalConfig,
        normalization: NormSpec,
        training: TrainingRecord,
    },
}

/// A persisted baseline.
#[derive(Clone, Debug, PartialEq)]
pub enum BaselineState {
    Linear(GridwiseLinear),
    Acausal {
        variable: String,
        model: AcausalModel,
        normalization: NormSpec,
        training: TrainingRecord,
    },
}

impl BaselineState {
    pub fn encode(&self) -> Result<Vec<u8>> {
        match self {
            BaselineState::Linear(m) => {
                let header = serde_json::to_string(&Header::GridwiseLinear {
                    variable: m.variable.clone(),
                    leads: m.leads,
                    lat: m.lat,
                    lon: m.lon,
                    degenerate: m.degenerate,
                })?;
                let mut store = ParamStore::new();
                let shape = [m.leads, m.lat, m.lon];
                store.insert("slope", "linear", Tensor::new(shape.to_vec(), m.slope.clone())?);
                store.insert("intercept", "linear", Tensor::new(shape.to_vec(), m.intercept.clone())?);
                Ok(encode_container(BASELINE_MAGIC, &header, &store, None))
            }
            BaselineState::Acausal {
                variable,
                model,
                normalization,
                training,
            } => {
                let header = serde_json::to_string(&Header::AcausalConv {
                    variable: variable.clone(),
                    config: model.config().clone(),
                    normalization: normalization.clone(),
                    training: training.clone(),
                })?;
                Ok(encode_container(BASELINE_MAGIC, &header, model.store(), None))
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let c = decode_container(BASELINE_MAGIC, bytes)?;
        let header: Header = serde_json::from_str(&c.header).map_err(|e| Error::format(4, format!("baseline metadata: {e}")))?;
        match header {
            Header::GridwiseLinear {
                variable,
                leads,
                lat,
                lon,
                degenerate,
            } => {
                let mut t = c.tensors.into_iter();
                let (Some((sn, slope)), Some((inn, intercept)), None) = (t.next(), t.next(), t.next()) else {
                    return Err(Error::format(4, "linear baseline expects slope and intercept tensors"));
                };
                let shape = [leads, lat, lon];
                if sn != "slope" || inn != "intercept" || slope.shape() != shape || intercept.shape() != shape {
                    return Err(Error::format(4, "linear baseline tensors do not match header"));
                }
                Ok(BaselineState::Linear(GridwiseLinear {
                    variable,
                    leads,
                    lat,
                    lon,
                    slope: slope.data().to_vec(),
                    intercept: intercept.data().to_vec(),
                    degenerate,
                }))
            }
            Header::AcausalConv {
                variable,
                config,
                normalization,
                training,
            } => Ok(BaselineState::Acausal {
                variable,
                model: AcausalModel::from_parts(config, c.tensors)?,
                normalization,
                training,
            }),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn id(&self) -> &'static str {
        match self {
            BaselineState::Linear(_) => LINEAR_ID,
            BaselineState::Acausal { .. } => ACAUSAL_ID,
        }
    }

    /// Builds the corrector; the acausal baseline needs its climatology
    /// when it was trained in dynamic space.
    pub fn handle(&self, clim: Option<std::sync::Arc<crate::climnorm::Climatology>>) -> Result<CorrectorHandle> {
        Ok(match self {
            BaselineState::Linear(m) => linear_handle(m.clone()),
            BaselineState::Acausal { model, normalization, .. } => acausal_handle(model.clone(), normalization.resolve(clim)?),
        })
    }
}
