use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CellKind, RnnModel};
use crate::error::{Error, Result};

/// One supervised dialogue: per-turn features and the observed return.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<Vec<f64>>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub cell: CellKind,
    pub hidden_dim: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before the rate is halved.
    pub patience: usize,
    /// Stop once this many epochs pass without improvement.
    pub stop_after: Option<usize>,
    /// Gradient-norm clip.
    pub clip: Option<f64>,
    pub init_scale: f64,
    pub orthogonal_init: bool,
    /// Targets are divided by this during training; the returned model
    /// predicts in original units.
    pub target_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cell: CellKind::Gru,
            hidden_dim: 100,
            lr: 0.01,
            epochs: 100,
            patience: 3,
            stop_after: None,
            clip: Some(5.0),
            init_scale: 0.1,
            orthogonal_init: false,
            target_scale: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 {
            return Err(Error::Config("hidden size and epochs must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.target_scale > 0.0 && self.target_scale.is_finite()) {
            return Err(Error::Config("target scale must be positive".into()));
        }
        if self.clip.is_some_and(|c| c <= 0.0) {
            return Err(Error::Config("clip threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean squared return error over the training set, original units.
    pub train_loss: f64,
    pub valid_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_rmse: f64,
    pub steps: usize,
}

/// Root-mean-square error of predicted returns.
pub fn rmse(model: &RnnModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut total = 0.0;
    for s in samples {
        total += model.dialogue_loss(&s.features, s.target)?;
    }
    Ok((total / samples.len() as f64).sqrt())
}

fn scaled(samples: &[Sample], k: f64) -> Vec<Sample> {
    samples.iter().map(|s| Sample { features: s.features.clone(), target: s.target / k }).collect()
}

/// SGD on one dialogue at a time with norm clipping, halving the rate when
/// validation stalls. Returns the snapshot with the best validation RMSE.
pub fn train(train_set: &[Sample], valid_set: &[Sample], cfg: &TrainConfig) -> Result<(RnnModel, TrainHistory)> {
    cfg.validate()?;
    let input_dim = train_set.first().and_then(|s| s.features.first()).map(Vec::len).ok_or(Error::EmptySequence)?;
    if valid_set.is_empty() {
        return Err(Error::EmptySequence);
    }
    let k = cfg.target_scale;
    let train_scaled = scaled(train_set, k);
    let valid_scaled = scaled(valid_set, k);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = RnnModel::new(cfg.cell, input_dim, cfg.hidden_dim, cfg.init_scale, cfg.orthogonal_init, &mut rng)?;
    let mut best = model.clone();
    let mut history = TrainHistory { best_valid_rmse: f64::INFINITY, ..Default::default() };
    let mut lr = cfg.lr;
    let mut stalled = 0;
    let mut order: Vec<usize> = (0..train_scaled.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let s = &train_scaled[i];
            let (loss, mut grad) = model.loss_and_gradient(&s.features, s.target)?;
            loss_sum += loss;
            if let Some(c) = cfg.clip {
                let norm = grad.norm();
                if norm > c {
                    grad.scale(c / norm);
                }
            }
            model.params.add_scaled(-lr, &grad);
            history.steps += 1;
        }
        let valid_rmse = match rmse(&model, &valid_scaled) {
            Ok(v) if v.is_finite() => v * k,
            Ok(v) => return Err(Error::Diverged { epoch, rmse: v }),
            Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch, rmse: f64::NAN }),
            Err(e) => return Err(e),
        };
        let train_loss = loss_sum / train_scaled.len() as f64 * k * k;
        log::debug!("epoch {epoch}: lr {lr:.5} train mse {train_loss:.4} valid rmse {valid_rmse:.4}");
        history.epochs.push(EpochRecord { epoch, lr, train_loss, valid_rmse });
        if valid_rmse < history.best_valid_rmse {
            history.best_valid_rmse = valid_rmse;
            history.best_epoch = epoch;
            best = model.clone();
            stalled = 0;
        } else {
            stalled += 1;
            if stalled % cfg.patience.max(1) == 0 {
                lr *= 0.5;
            }
            if cfg.stop_after.is_some_and(|n| stalled >= n) {
                break;
            }
        }
    }
    best.scale_output(k);
    Ok((best, history))
}
