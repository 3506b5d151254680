//! The optimization loop.

use crate::adam::AdamState;
use crate::config::{LossKind, Monitor, TrainConfig};
use crate::error::{Result, TrainError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;
use tsc_data::LabeledDataset;
use tsc_models::{batch_tensor, one_hot, ForwardOpts, ModelState};
use tsc_tensor::{Tensor, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub checkpoint_epoch: usize,
    pub wall_seconds: f64,
}

impl TrainReport {
    /// `epoch,train_loss,val_loss,lr` rows; `val_loss` is empty when no
    /// validation split was configured.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,lr\n");
        for (i, e) in self.epochs.iter().enumerate() {
            let val = e.val_loss.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:.16e},{},{:.16e}", i, e.train_loss, val, e.lr);
        }
        out
    }

    pub fn monitored(&self, monitor: Monitor) -> Vec<f64> {
        self.epochs
            .iter()
            .map(|e| match monitor {
                Monitor::BestTrainLoss => e.train_loss,
                Monitor::BestValLoss => e.val_loss.unwrap_or(f64::INFINITY),
            })
            .collect()
    }
}

/// Plateau tracker; mirrors the reference recipe (halve the rate after
/// `patience` epochs without improvement, floor at `min_lr`).
pub struct Plateau {
    best: f64,
    wait: usize,
}

impl Plateau {
    pub fn new() -> Self {
        Plateau {
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Feeds one monitored value; returns the new learning rate when the
    /// schedule fires.
    pub fn observe(
        &mut self,
        loss: f64,
        lr: f64,
        reduce: &Option<crate::config::LrReduce>,
    ) -> Option<f64> {
        if loss < self.best {
            self.best = loss;
            self.wait = 0;
            return None;
        }
        self.wait += 1;
        let reduce = reduce.as_ref()?;
        if self.wait >= reduce.patience && lr > reduce.min_lr {
            self.wait = 0;
            return Some((lr * reduce.factor).max(reduce.min_lr));
        }
        None
    }
}

/// Per-epoch shuffled batch construction, seeded so that every consumer
/// of the same `(seed, epoch)` pair sees the same order.
pub struct Batcher {
    indices: Vec<usize>,
    seed: u64,
}

impl Batcher {
    pub fn new(indices: Vec<usize>, seed: u64) -> Self {
        Batcher { indices, seed }
    }

    /// Shuffled index batches for one epoch, drawn from a per-epoch stream
    /// of the training seed; the last partial batch is kept.
    pub fn epoch_batches(&self, epoch: usize, batch_size: usize) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64 + 1);
        let mut shuffled = self.indices.clone();
        shuffled.shuffle(&mut rng);
        shuffled
            .chunks(batch_size)
            .map(|chunk| chunk.to_vec())
            .collect()
    }
}

pub fn loss_node(
    pass: &mut tsc_models::ForwardPass,
    loss: LossKind,
    targets: &Tensor,
) -> Result<Value> {
    let node = match loss {
        LossKind::CrossEntropy => pass.tape.cross_entropy_loss(pass.output, targets)?,
        LossKind::Mse => pass.tape.mse_loss(pass.output, targets)?,
    };
    Ok(node)
}

/// Gathers leaf gradients back into a name-keyed map.
pub fn param_grads(
    pass: &tsc_models::ForwardPass,
    grads: &mut tsc_tensor::Gradients,
) -> BTreeMap<String, Tensor> {
    let mut out = BTreeMap::new();
    for (name, &value) in &pass.params {
        if let Some(g) = grads.take(value) {
            out.insert(name.clone(), g);
        }
    }
    out
}

fn eval_loss(
    state: &ModelState,
    dataset: &LabeledDataset,
    indices: &[usize],
    loss: LossKind,
) -> Result<f64> {
    let series: Vec<_> = indices.iter().map(|&i| &dataset.series()[i]).collect();
    let labels: Vec<usize> = indices.iter().map(|&i| dataset.labels()[i]).collect();
    let input = batch_tensor(&series)?;
    let targets = one_hot(&labels, state.spec.n_classes);
    let mut pass = state.forward_eval(&input, ForwardOpts::eval())?;
    let node = loss_node(&mut pass, loss, &targets)?;
    Ok(pass.tape.value(node).data()[0])
}

/// Trains `state` in place semantics: returns the checkpointed model (the
/// parameter snapshot minimizing the monitored loss) and the per-epoch
/// report. Deterministic for a fixed seed at thread count 1.
pub fn train(
    state: &ModelState,
    dataset: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(ModelState, TrainReport)> {
    config.validate()?;
    let start = Instant::now();
    let k = state.spec.n_classes;
    let n = dataset.len();

    // optional validation split, carved deterministically from the seed
    let mut all: Vec<usize> = (0..n).collect();
    let n_val = (n as f64 * config.val_fraction).floor() as usize;
    let (train_idx, val_idx) = if n_val > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        all.shuffle(&mut rng);
        let val = all.split_off(all.len() - n_val);
        (all, val)
    } else {
        (all, Vec::new())
    };

    let mut model = state.clone();
    let mut adam = AdamState::new();
    let mut lr = config.lr;
    let mut plateau = Plateau::new();
    let batcher = Batcher::new(train_idx.clone(), config.seed);

    let mut report = TrainReport {
        epochs: Vec::with_capacity(config.epochs),
        checkpoint_epoch: 0,
        wall_seconds: 0.0,
    };
    let mut best_monitored = f64::INFINITY;
    let mut snapshot: Option<(BTreeMap<String, Tensor>, BTreeMap<String, Tensor>, usize)> = None;

    for epoch in 0..config.epochs {
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
        dropout_rng.set_stream(u64::MAX - epoch as u64);
        let mut epoch_loss = 0.0;
        for batch in batcher.epoch_batches(epoch, config.batch_size) {
            let series: Vec<_> = batch.iter().map(|&i| &dataset.series()[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| dataset.labels()[i]).collect();
            let input = batch_tensor(&series)?;
            let targets = one_hot(&labels, k);
            let mut pass = model.forward_mut(&input, ForwardOpts::train(), &mut dropout_rng)?;
            let node = loss_node(&mut pass, config.loss, &targets)?;
            let loss_value = pass.tape.value(node).data()[0];
            if !loss_value.is_finite() {
                return Err(TrainError::Diverged {
                    last_finite_epoch: epoch.saturating_sub(1),
                });
            }
            epoch_loss += loss_value * batch.len() as f64;
            let mut grads = pass.tape.backward(node)?;
            let grad_map = param_grads(&pass, &mut grads);
            adam.step(&mut model.params, &grad_map, lr, config.beta1, config.beta2)?;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_loss = if val_idx.is_empty() {
            None
        } else {
            Some(eval_loss(&model, dataset, &val_idx, config.loss)?)
        };
        report.epochs.push(EpochStats {
            train_loss,
            val_loss,
            lr,
        });

        let monitored = match config.checkpoint {
            Monitor::BestTrainLoss => train_loss,
            Monitor::BestValLoss => val_loss.expect("validated config"),
        };
        if monitored < best_monitored {
            best_monitored = monitored;
            snapshot = Some((model.params.clone(), model.running.clone(), epoch));
        }
        if let Some(new_lr) = plateau.observe(monitored, lr, &config.lr_reduce) {
            lr = new_lr;
        }
        if let Some(budget) = config.max_seconds {
            if start.elapsed().as_secs_f64() > budget {
                break;
            }
        }
    }

    let (params, running, checkpoint_epoch) =
        snapshot.expect("at least one epoch must have run");
    model.params = params;
    model.running = running;
    model.train_meta.epochs_seen = report.epochs.len();
    let tag = match config.checkpoint {
        Monitor::BestTrainLoss => format!("best_train_loss@{checkpoint_epoch}"),
        Monitor::BestValLoss => format!("best_val_loss@{checkpoint_epoch}"),
    };
    model.train_meta.checkpoint_tag = tag;
    report.checkpoint_epoch = checkpoint_epoch;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}

/// Transfer: replace the softmax head with a fresh one sized for the target
/// dataset, Glorot-initialize it, then fine-tune the whole network on the
/// target per `config`. Only GAP-terminated architectures transfer across
/// lengths.
pub fn fine_tune(
    pretrained: &ModelState,
    target: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(ModelState, TrainReport)> {
    if !pretrained.spec.architecture.has_gap() {
        return Err(TrainError::NotTransferable {
            arch: pretrained.spec.architecture.as_str(),
        });
    }
    let mut adapted = pretrained.clone();
    adapted.replace_head(target.n_classes())?;
    crate::init::glorot_uniform_init_where(&mut adapted, config.seed, |name| {
        name.starts_with("head.")
    });
    train(&adapted, target, config)
}
