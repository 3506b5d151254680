use crate::error::{Result, TrainError};
use tsc_models::parse_kv;

/// Plateau learning-rate schedule: multiply by `factor` whenever the
/// monitored loss fails to improve for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrReduce {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for LrReduce {
    fn default() -> Self {
        LrReduce {
            factor: 0.5,
            patience: 50,
            min_lr: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    BestTrainLoss,
    BestValLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub lr_reduce: Option<LrReduce>,
    pub loss: LossKind,
    pub seed: u64,
    pub checkpoint: Monitor,
    pub val_fraction: f64,
    /// Soft wall-clock budget; when exceeded the loop stops and returns the
    /// best checkpoint so far.
    pub max_seconds: Option<f64>,
}

impl Default for TrainConfig {
    /// The reference recipe: Adam(0.001, 0.9, 0.999), batch 16, train-loss
    /// checkpointing, plateau LR halving with patience 50 down to 1e-4.
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            batch_size: 16,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            lr_reduce: Some(LrReduce::default()),
            loss: LossKind::CrossEntropy,
            seed: 0,
            checkpoint: Monitor::BestTrainLoss,
            val_fraction: 0.0,
        max_seconds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TrainError::BadConfig("epochs must be >= 1".into()));
        }
        if self.lr <= 0.0 {
            return Err(TrainError::BadConfig("lr must be > 0".into()));
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return Err(TrainError::BadConfig("betas must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(TrainError::BadConfig("val_fraction must be in [0, 1)".into()));
        }
        if self.checkpoint == Monitor::BestValLoss && self.val_fraction == 0.0 {
            return Err(TrainError::BadConfig(
                "best_val_loss checkpointing needs val_fraction > 0".into(),
            ));
        }
        Ok(())
    }

    /// Parses the flat `key = value` grammar; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = TrainConfig::default();
        let mut reduce = LrReduce::default();
        let mut no_reduce = false;
        for (key, value) in parse_kv(text) {
            match key.as_str() {
                "epochs" => config.epochs = num(&key, &value)?,
                "batch_size" => config.batch_size = num(&key, &value)?,
                "lr" => config.lr = fnum(&key, &value)?,
                "beta1" => config.beta1 = fnum(&key, &value)?,
                "beta2" => config.beta2 = fnum(&key, &value)?,
                "lr_reduce" => no_reduce = value == "none",
                "lr_factor" => reduce.factor = fnum(&key, &value)?,
                "lr_patience" => reduce.patience = num(&key, &value)?,
                "min_lr" => reduce.min_lr = fnum(&key, &value)?,
                "loss" => {
                    config.loss = match value.as_str() {
                        "cross_entropy" => LossKind::CrossEntropy,
                        "mse" => LossKind::Mse,
                        other => {
                            return Err(TrainError::BadConfig(format!("unknown loss {other:?}")))
                        }
                    }
                }
                "seed" => config.seed = num(&key, &value)? as u64,
                "checkpoint" => {
                    config.checkpoint = match value.as_str() {
                        "best_train_loss" => Monitor::BestTrainLoss,
                        "best_val_loss" => Monitor::BestValLoss,
                        other => {
                            return Err(TrainError::BadConfig(format!(
                                "unknown checkpoint {other:?}"
                            )))
                        }
                    }
                }
                "val_fraction" => config.val_fraction = fnum(&key, &value)?,
                "max_seconds" => config.max_seconds = Some(fnum(&key, &value)?),
                other => {
                    return Err(TrainError::BadConfig(format!("unknown key {other:?}")));
                }
            }
        }
        config.lr_reduce = if no_reduce { None } else { Some(reduce) };
        config.validate()?;
        Ok(config)
    }
}

fn num(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| TrainError::BadConfig(format!("bad value for {key}: {value:?}")))
}

fn fnum(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| TrainError::BadConfig(format!("bad value for {key}: {value:?}")))
}
