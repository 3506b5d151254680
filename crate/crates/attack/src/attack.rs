//! Gradient-sign attacks under an l-infinity ball.
//!
//! Both attacks take the loss gradient with respect to the input with batch
//! norm in eval mode; z-normalized series are unbounded, so the only clip is
//! the epsilon ball itself. The sign of a zero gradient is zero.

use crate::error::{AttackError, Result};
use tsc_data::{LabeledDataset, TimeSeries};
use tsc_models::{argmax_rows, dataset_tensor, one_hot, ForwardOpts, ModelState};
use tsc_tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMethod {
    Fgsm,
    Bim,
}

impl AttackMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMethod::Fgsm => "fgsm",
            AttackMethod::Bim => "bim",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttackConfig {
    pub method: AttackMethod,
    pub epsilon: f64,
    /// BIM iteration count.
    pub iterations: usize,
    /// BIM per-step size; `None` means `epsilon / iterations`.
    pub alpha: Option<f64>,
}

impl AttackConfig {
    pub fn fgsm(epsilon: f64) -> Self {
        AttackConfig {
            method: AttackMethod::Fgsm,
            epsilon,
            iterations: 1,
            alpha: Some(epsilon),
        }
    }

    pub fn bim(epsilon: f64) -> Self {
        AttackConfig {
            method: AttackMethod::Bim,
            epsilon,
            iterations: 10,
            alpha: None,
        }
    }

    pub fn step(&self) -> f64 {
        self.alpha.unwrap_or(self.epsilon / self.iterations as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon < 0.0 {
            return Err(AttackError::BadConfig("epsilon must be >= 0".into()));
        }
        if self.iterations == 0 {
            return Err(AttackError::BadConfig("iterations must be >= 1".into()));
        }
        if self.step() > self.epsilon && self.epsilon > 0.0 {
            return Err(AttackError::BadConfig(
                "step alpha must not exceed epsilon".into(),
            ));
        }
        Ok(())
    }
}

/// Loss gradient w.r.t. the input batch, batch norm in eval mode.
fn input_gradient(model: &ModelState, input: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let opts = ForwardOpts {
        input_grad: true,
        ..ForwardOpts::eval()
    };
    let mut pass = model.forward_eval(input, opts)?;
    let targets = one_hot(labels, model.spec.n_classes);
    let loss = pass.tape.cross_entropy_loss(pass.output, &targets)?;
    let mut grads = pass.tape.backward(loss)?;
    grads
        .take(pass.input)
        .ok_or_else(|| AttackError::BadConfig("input gradient unavailable".into()))
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One-step attack: `x' = x + eps * sign(grad_x J(x, y))`.
pub fn fgsm(model: &ModelState, input: &Tensor, labels: &[usize], epsilon: f64) -> Result<Tensor> {
    bim(model, input, labels, &AttackConfig {
        method: AttackMethod::Fgsm,
        epsilon,
        iterations: 1,
        alpha: Some(epsilon),
    })
}

/// Iterative attack: repeat `x' += alpha * sign(grad)` and clip back into
/// `[x - eps, x + eps]` after every step, re-evaluating the gradient at the
/// current iterate. `I = 1, alpha = eps` reduces exactly to FGSM.
pub fn bim(
    model: &ModelState,
    input: &Tensor,
    labels: &[usize],
    config: &AttackConfig,
) -> Result<Tensor> {
    config.validate()?;
    let alpha = config.step();
    let mut current = input.clone();
    for _ in 0..config.iterations {
        let grad = input_gradient(model, &current, labels)?;
        let shape = current.shape().to_vec();
        let data: Vec<f64> = current
            .data()
            .iter()
            .zip(grad.data())
            .zip(input.data())
            .map(|((&x, &g), &orig)| {
                let stepped = x + alpha * sign(g);
                stepped.min(orig + config.epsilon).max(orig - config.epsilon)
            })
            .collect();
        current = Tensor::from_vec(&shape, data)?;
        debug_assert!(ball_radius(input, &current) <= config.epsilon + 1e-12);
    }
    assert!(
        ball_radius(input, &current) <= config.epsilon + 1e-12,
        "perturbation escaped the epsilon ball"
    );
    Ok(current)
}

/// Largest absolute per-element deviation between two equal-shape tensors.
pub fn ball_radius(a: &Tensor, b: &Tensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Perturbed copies of a test set, index-aligned with the source.
#[derive(Debug, Clone)]
pub struct AdversarialSet {
    pub series: Vec<TimeSeries>,
    /// Whether the model's prediction changed on the perturbed sample.
    pub flipped: Vec<bool>,
    pub method: AttackMethod,
    pub epsilon: f64,
}

impl AdversarialSet {
    /// Repackages the perturbed series with the original labels, suitable
    /// for UCR export under a `_adv_<method>_<eps>` suffix.
    pub fn to_dataset(&self, source: &LabeledDataset) -> LabeledDataset {
        LabeledDataset::new(
            format!("{}_adv_{}_{}", source.name, self.method.as_str(), self.epsilon),
            self.series.clone(),
            source.labels().to_vec(),
            source.n_classes(),
        )
        .expect("aligned adversarial set")
    }
}

/// Attacks every series of a test set using the model's own predictions as
/// the loss labels (no test-label leakage), then scores both versions
/// against the true labels.
pub fn attack_dataset(
    model: &ModelState,
    test: &LabeledDataset,
    config: &AttackConfig,
) -> Result<(AdversarialSet, f64, f64)> {
    config.validate()?;
    let input = dataset_tensor(test)?;
    let clean_preds = model.predict_labels(&input)?;
    let perturbed = bim(model, &input, &clean_preds, config)?;
    let adv_preds = model.predict_labels(&perturbed)?;

    let n = test.len();
    let dims = test.dims();
    let t = input.shape()[2];
    let mut series = Vec::with_capacity(n);
    for i in 0..n {
        let values = perturbed.data()[i * dims * t..(i + 1) * dims * t].to_vec();
        series.push(TimeSeries::multivariate(dims, values)?);
    }
    let flipped: Vec<bool> = clean_preds
        .iter()
        .zip(&adv_preds)
        .map(|(a, b)| a != b)
        .collect();

    let accuracy = |preds: &[usize]| {
        preds
            .iter()
            .zip(test.labels())
            .filter(|(p, l)| p == l)
            .count() as f64
            / n as f64
    };
    let clean_acc = accuracy(&clean_preds);
    let adv_acc = accuracy(&adv_preds);
    Ok((
        AdversarialSet {
            series,
            flipped,
            method: config.method,
            epsilon: config.epsilon,
        },
        clean_acc,
        adv_acc,
    ))
}
