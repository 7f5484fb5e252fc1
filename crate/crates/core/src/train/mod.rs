//! Adam training of sequence correctors in normalized space, fine-tuning
//! with frozen parameter groups.

pub mod adam;
pub mod trainer;

pub use adam::{adam_step, trainable_mask, AdamConfig, AdamState};
pub use trainer::{evaluate_loss, finetune, loss_curve_csv, mse, mse_loss, train, train_batch, TrainConfig, TrainOutcome};

/// Groups frozen by default when fine-tuning on a new variable.
pub const DEFAULT_FREEZE: &[&str] = &[crate::model::resa::GROUP_CONVLSTM];
