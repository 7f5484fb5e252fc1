//! The ConvLSTM corrector: configuration, layers, forward pass and
//! checkpoints.
//!
//! For each lead the normalized forecast passes up a ConvLSTM stack, the
//! top hidden state is refined by spatial self-attention within that lead,
//! batch-normalized and projected by a 1×1 head whose output is added to
//! the input forecast. Nothing at lead `t` reads inputs from later leads.

pub mod checkpoint;
pub mod config;
pub mod layers;
pub mod resa;
pub mod sequence;

pub use checkpoint::{LossPoint, ModelMeta, ModelState, TrainingRecord};
pub use config::{param_count, Architecture, ReSAConfig, REFERENCE_PARAM_COUNT};
pub use layers::{attention_apply, attention_with_weights, cell_step, AttentionParams, CellParams};
pub use resa::ReSAModel;
pub use sequence::SequenceModel;
