use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, trainable_mask, AdamConfig, AdamState};
use crate::autodiff::{BnMode, Tape, Tensor, Var};
use crate::climnorm::NormalizedCase;
use crate::error::{Error, Result};
use crate::model::resa::GROUP_BATCHNORM;
use crate::model::{LossPoint, SequenceModel, TrainingRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
    /// Parameter groups held fixed.
    pub freeze: Vec<String>,
    /// Validation loss whose first attainment is recorded.
    pub target_val_loss: Option<f64>,
    /// Stop as soon as `target_val_loss` is reached.
    pub stop_at_target: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 4,
            adam: AdamConfig::default(),
            seed: 0,
            patience: Some(10),
            freeze: Vec::new(),
            target_val_loss: None,
            stop_at_target: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(Error::config("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Best-validation model, the model after the last epoch and the history.
#[derive(Clone, Debug)]
pub struct TrainOutcome<M> {
    pub best: M,
    pub last: M,
    pub record: TrainingRecord,
    /// First epoch count at which validation loss reached the target.
    pub epochs_to_target: Option<usize>,
}

/// Mean squared error of two equally shaped tensors on the tape.
pub fn mse_loss(tape: &mut Tape, pred: Var, target: Var) -> Result<Var> {
    tape.mse(pred, target)
}

/// Mean squared error over all elements of two slices.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::dim(format!("mse over {} and {} values", pred.len(), target.len())));
    }
    Ok(pred.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pred.len() as f64)
}

fn check_cases<M: SequenceModel>(model: &M, cases: &[NormalizedCase]) -> Result<usize> {
    let (lat, lon) = model.grid();
    let n = lat * lon;
    let first = cases.first().ok_or_else(|| Error::contract("training on an empty dataset"))?;
    let len = first.forecast.len();
    for c in cases {
        if c.forecast.len() != len || c.truth.len() != len || len % n != 0 {
            return Err(Error::dim("cases differ in lead count or grid"));
        }
    }
    let leads = len / n;
    if let Some(l) = model.fixed_leads() {
        if l != leads {
            return Err(Error::dim(format!("model takes {l} leads, cases have {leads}")));
        }
    }
    Ok(leads)
}

/// Normalized-space MSE of `model` over `cases`, inference mode.
pub fn evaluate_loss<M: SequenceModel>(model: &M, cases: &[NormalizedCase]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::contract("validation on an empty dataset"));
    }
    let mut total = 0.0;
    for c in cases {
        total += mse(&model.predict(&c.forecast)?, &c.truth)?;
    }
    Ok(total / cases.len() as f64)
}

/// One optimizer step on a mini-batch; returns the batch loss.
pub fn train_batch<M: SequenceModel>(
    model: &mut M,
    batch: &[&NormalizedCase],
    adam: &mut AdamState,
    config: &AdamConfig,
    trainable: &[bool],
    commit_stats: bool,
) -> Result<f64> {
    let (lat, lon) = model.grid();
    let n = lat * lon;
    let mut tape = Tape::new();
    let mut inputs = Vec::with_capacity(batch.len());
    let mut target = Vec::new();
    for c in batch {
        inputs.push(tape.leaf(Tensor::new(vec![c.forecast.len() / n, lat, lon], c.forecast.clone())?));
        target.extend_from_slice(&c.truth);
    }
    let (outs, stats) = model.forward_batch(&mut tape, &inputs, BnMode::Train)?;
    let pred = tape.concat(&outs)?;
    let rows = target.len() / n;
    let target = tape.leaf(Tensor::new(vec![rows, lat, lon], target)?);
    let loss = mse_loss(&mut tape, pred, target)?;
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::Numeric(format!("non-finite batch loss {value}")));
    }
    let grads = tape.backward(loss)?.params(model.store());
    adam_step(model.store_mut(), &grads, adam, config, trainable)?;
    if let (Some(s), true) = (stats, commit_stats) {
        model.set_running_stats(s);
    }
    Ok(value)
}

/// Seeded mini-batch Adam on normalized cases; loss is MSE over all leads.
/// Validation runs after every epoch and the best model is kept.
pub fn train<M: SequenceModel>(model: M, train: &[NormalizedCase], val: &[NormalizedCase], config: &TrainConfig) -> Result<TrainOutcome<M>> {
    config.validate()?;
    check_cases(&model, train)?;
    check_cases(&model, val)?;
    let trainable = trainable_mask(model.store(), &config.freeze)?;
    // Frozen batchnorm keeps its running statistics as well.
    let commit_stats = !config.freeze.iter().any(|g| g == GROUP_BATCHNORM);
    let mut model = model;
    let mut adam = AdamState::new(model.store());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut curve = Vec::with_capacity(config.epochs);
    let mut epochs_to_target = None;
    let mut stale = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&NormalizedCase> = chunk.iter().map(|&i| &train[i]).collect();
            let loss = train_batch(&mut model, &batch, &mut adam, &config.adam, &trainable, commit_stats).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, batch {b}: {m}")),
                other => other,
            })?;
            sum += loss * chunk.len() as f64;
        }
        let train_loss = sum / train.len() as f64;
        let val_loss = evaluate_loss(&model, val).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, validation: {m}")),
            other => other,
        })?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!("epoch {epoch}: non-finite validation loss")));
        }
        curve.push(LossPoint {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        if epochs_to_target.is_none() && config.target_val_loss.is_some_and(|t| val_loss <= t) {
            epochs_to_target = Some(epoch + 1);
            if config.stop_at_target {
                break;
            }
        }
        if config.patience.is_some_and(|p| stale >= p) {
            break;
        }
    }
    let record = TrainingRecord {
        seed: config.seed,
        epochs_run: curve.len(),
        best_epoch,
        best_val_loss: best_val,
        frozen_groups: config.freeze.clone(),
        loss_curve: curve,
    };
    Ok(TrainOutcome {
        best,
        last: model,
        record,
        epochs_to_target,
    })
}

/// Continues training a pretrained model on a new variable with the
/// configured groups frozen.
pub fn finetune<M: SequenceModel>(pretrained: M, train_cases: &[NormalizedCase], val: &[NormalizedCase], config: &TrainConfig) -> Result<TrainOutcome<M>> {
    train(pretrained, train_cases, val, config)
}

/// Loss curve as CSV with header `epoch,train_loss,val_loss`.
pub fn loss_curve_csv(curve: &[LossPoint]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss\n");
    for p in curve {
        s.push_str(&format!("{},{},{}\n", p.epoch, p.train_loss, p.val_loss));
    }
    s
}
