//! Adversarial training, optionally with AdvProp-style dual batch norm.
//!
//! Every batch is paired with adversarial twins crafted against the current
//! weights (true training labels, eval-mode gradients). Without AdvProp the
//! twins simply extend the batch through the single BN set, which makes a
//! zero-epsilon run coincide with ordinary training. With AdvProp the clean
//! half flows through the primary BN set and the perturbed half through a
//! second set (`@adv` tensors); the loss is the mean of the two halves and
//! inference keeps using the clean set.

use crate::attack::{bim, AttackConfig};
use crate::error::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;
use tsc_data::LabeledDataset;
use tsc_models::{batch_tensor, bn_key, one_hot, BnSet, ForwardOpts, ModelState};
use tsc_tensor::{Mode, Tensor};
use tsc_train::{
    loss_node, param_grads, AdamState, Batcher, EpochStats, Monitor, Plateau, TrainConfig,
    TrainError, TrainReport,
};

/// Duplicates every batch-norm tensor under the `@adv` suffix so that clean
/// and adversarial batches can keep separate statistics.
pub fn prepare_advprop(state: &ModelState) -> ModelState {
    let mut model = state.clone();
    let bn_params: Vec<(String, Tensor)> = model
        .params
        .iter()
        .filter(|(k, _)| k.ends_with(".gamma") || k.ends_with(".beta"))
        .map(|(k, v)| (bn_key(k, BnSet::Adversarial), v.clone()))
        .collect();
    for (k, v) in bn_params {
        model.params.insert(k, v);
    }
    let bn_stats: Vec<(String, Tensor)> = model
        .running
        .iter()
        .map(|(k, v)| (bn_key(k, BnSet::Adversarial), v.clone()))
        .collect();
    for (k, v) in bn_stats {
        model.running.insert(k, v);
    }
    model
}

fn merge_grads(
    mut a: BTreeMap<String, Tensor>,
    b: BTreeMap<String, Tensor>,
    weight: f64,
) -> BTreeMap<String, Tensor> {
    for v in a.values_mut() {
        for x in v.data_mut() {
            *x *= weight;
        }
    }
    for (k, mut t) in b {
        for x in t.data_mut() {
            *x *= weight;
        }
        match a.get_mut(&k) {
            Some(existing) => {
                for (e, n) in existing.data_mut().iter_mut().zip(t.data()) {
                    *e += n;
                }
            }
            None => {
                a.insert(k, t);
            }
        }
    }
    a
}

/// Trains with per-batch adversarial twins. Returns the checkpointed model;
/// with `advprop` the returned model predicts through the clean BN set.
pub fn adversarial_train(
    state: &ModelState,
    dataset: &LabeledDataset,
    train_config: &TrainConfig,
    attack_config: &AttackConfig,
    advprop: bool,
) -> Result<(ModelState, TrainReport)> {
    train_config.validate()?;
    attack_config.validate()?;
    let start = Instant::now();
    let k = state.spec.n_classes;
    let n = dataset.len();

    let mut model = if advprop {
        prepare_advprop(state)
    } else {
        state.clone()
    };
    let mut adam = AdamState::new();
    let mut lr = train_config.lr;
    let mut plateau = Plateau::new();
    let batcher = Batcher::new((0..n).collect(), train_config.seed);

    let mut report = TrainReport {
        epochs: Vec::with_capacity(train_config.epochs),
        checkpoint_epoch: 0,
        wall_seconds: 0.0,
    };
    let mut best = f64::INFINITY;
    let mut snapshot: Option<(BTreeMap<String, Tensor>, BTreeMap<String, Tensor>, usize)> = None;

    for epoch in 0..train_config.epochs {
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(train_config.seed);
        dropout_rng.set_stream(u64::MAX - epoch as u64);
        let mut epoch_loss = 0.0;
        for batch in batcher.epoch_batches(epoch, train_config.batch_size) {
            let series: Vec<_> = batch.iter().map(|&i| &dataset.series()[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| dataset.labels()[i]).collect();
            let input = batch_tensor(&series)?;
            let twins = bim(&model, &input, &labels, attack_config)?;
            let targets = one_hot(&labels, k);

            let (loss_value, grad_map) = if advprop {
                // clean half through the primary BN set
                let mut clean_pass = model.forward_mut(
                    &input,
                    ForwardOpts {
                        mode: Mode::Train,
                        bn_set: BnSet::Clean,
                        trainable: true,
                        input_grad: false,
                    },
                    &mut dropout_rng,
                )?;
                let clean_loss = loss_node(&mut clean_pass, train_config.loss, &targets)?;
                let clean_value = clean_pass.tape.value(clean_loss).data()[0];
                let mut clean_grads = clean_pass.tape.backward(clean_loss)?;
                let clean_map = param_grads(&clean_pass, &mut clean_grads);
                drop(clean_pass);

                // adversarial half through the @adv BN set
                let mut adv_pass = model.forward_mut(
                    &twins,
                    ForwardOpts {
                        mode: Mode::Train,
                        bn_set: BnSet::Adversarial,
                        trainable: true,
                        input_grad: false,
                    },
                    &mut dropout_rng,
                )?;
                let adv_loss = loss_node(&mut adv_pass, train_config.loss, &targets)?;
                let adv_value = adv_pass.tape.value(adv_loss).data()[0];
                let mut adv_grads = adv_pass.tape.backward(adv_loss)?;
                let adv_map = param_grads(&adv_pass, &mut adv_grads);

                (
                    0.5 * (clean_value + adv_value),
                    merge_grads(clean_map, adv_map, 0.5),
                )
            } else {
                // one doubled batch through the single BN set
                let doubled = concat_batches(&input, &twins)?;
                let doubled_targets = concat_batches(&targets, &targets)?;
                let mut pass =
                    model.forward_mut(&doubled, ForwardOpts::train(), &mut dropout_rng)?;
                let loss = loss_node(&mut pass, train_config.loss, &doubled_targets)?;
                let value = pass.tape.value(loss).data()[0];
                let mut grads = pass.tape.backward(loss)?;
                let map = param_grads(&pass, &mut grads);
                (value, map)
            };

            if !loss_value.is_finite() {
                return Err(TrainError::Diverged {
                    last_finite_epoch: epoch.saturating_sub(1),
                }
                .into());
            }
            epoch_loss += loss_value * batch.len() as f64;
            adam.step(
                &mut model.params,
                &grad_map,
                lr,
                train_config.beta1,
                train_config.beta2,
            )
            .map_err(crate::error::AttackError::from)?;
        }
        let train_loss = epoch_loss / n as f64;
        report.epochs.push(EpochStats {
            train_loss,
            val_loss: None,
            lr,
        });
        if train_loss < best {
            best = train_loss;
            snapshot = Some((model.params.clone(), model.running.clone(), epoch));
        }
        if let Some(new_lr) = plateau.observe(train_loss, lr, &train_config.lr_reduce) {
            lr = new_lr;
        }
        if let Some(budget) = train_config.max_seconds {
            if start.elapsed().as_secs_f64() > budget {
                break;
            }
        }
    }

    let (params, running, checkpoint_epoch) = snapshot.expect("at least one epoch ran");
    model.params = params;
    model.running = running;
    model.train_meta.epochs_seen = report.epochs.len();
    model.train_meta.checkpoint_tag = format!("best_train_loss@{checkpoint_epoch}");
    report.checkpoint_epoch = checkpoint_epoch;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}

fn concat_batches(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mut shape = a.shape().to_vec();
    shape[0] += b.shape()[0];
    let mut data = Vec::with_capacity(a.numel() + b.numel());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Ok(Tensor::from_vec(&shape, data)?)
}
