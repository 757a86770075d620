use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{adam_step, clip_grad_norm, AdamState, TrainConfig};
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::models::{Architecture, Forecaster, ModelParams};
use crate::numerics::Rng;

/// Mean squared error.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::invalid(format!(
            "mse_loss length mismatch: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss input".into()));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

fn evaluate<F: Forecaster>(params: &F, data: &WindowedDataset, batch: usize) -> Result<f64> {
    let indices: Vec<usize> = (0..data.len()).collect();
    let mut sum = 0.0;
    for chunk in indices.chunks(batch.max(1)) {
        let part = data.select(chunk);
        let preds = params.predict_batch(&part.inputs)?;
        sum += mse_loss(&preds, &part.targets)? * chunk.len() as f64;
    }
    Ok(sum / data.len() as f64)
}

/// Trains `params` in place of a fresh initialization and returns the
/// parameters from the epoch with the lowest validation loss.
///
/// `on_epoch` sees every completed epoch, e.g. to stream a training log.
pub fn fit<F: Forecaster>(
    mut params: F,
    train: &WindowedDataset,
    val: &WindowedDataset,
    cfg: &TrainConfig,
    rng: &mut Rng,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(F, TrainHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation set".into()));
    }
    let mut adam = AdamState::new(&params);
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = (f64::INFINITY, params.clone());
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let abort = |reason: String| Error::TrainingAborted {
                epoch,
                batch: b + 1,
                reason,
            };
            let batch = train.select(chunk);
            let (preds, cache) = params.forward_batch(&batch.inputs)?;
            let loss = mse_loss(&preds, &batch.targets)?;
            if !loss.is_finite() {
                return Err(abort(format!("non-finite loss {loss}")));
            }
            let n = chunk.len() as f64;
            let d_pred: Vec<f64> = preds
                .iter()
                .zip(&batch.targets)
                .map(|(p, t)| 2.0 * (p - t) / n)
                .collect();
            let mut grads = params.backward_batch(&cache, &d_pred)?;
            if !grads.is_finite() {
                return Err(abort("non-finite gradient".into()));
            }
            clip_grad_norm(&mut grads, cfg.grad_clip_norm);
            adam_step(&mut params, &grads, &mut adam, cfg)?;
            loss_sum += loss * n;
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = evaluate(&params, val, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::TrainingAborted {
                epoch,
                batch: 0,
                reason: format!("non-finite validation loss {val_loss}"),
            });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        on_epoch(&EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: started.elapsed().as_secs_f64(),
        });
        if val_loss < best.0 {
            best = (val_loss, params.clone());
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    Ok((best.1, history))
}

/// Initializes a model from `cfg.seed` and trains it.
pub fn train(
    arch: &Architecture,
    train: &WindowedDataset,
    val: &WindowedDataset,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let params = ModelParams::init(arch, &mut rng)?;
    fit(params, train, val, cfg, &mut rng, on_epoch)
}
