//! Bias-corrected Adam.

use crate::error::{Result, TrainError};
use std::collections::BTreeMap;
use tsc_tensor::Tensor;

pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment accumulators, allocated lazily per parameter.
#[derive(Debug, Default)]
pub struct AdamState {
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
    t: usize,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step_count(&self) -> usize {
        self.t
    }

    /// One update over every `(name, gradient)` pair:
    /// `m = b1*m + (1-b1)*g`, `v = b2*v + (1-b2)*g^2`, then
    /// `p -= lr * mhat / (sqrt(vhat) + eps)` with the usual bias
    /// corrections. A NaN gradient aborts, naming the parameter.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Tensor>,
        grads: &BTreeMap<String, Tensor>,
        lr: f64,
        beta1: f64,
        beta2: f64,
    ) -> Result<()> {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (name, grad) in grads {
            if grad.data().iter().any(|g| g.is_nan()) {
                return Err(TrainError::NanGradient(name.clone()));
            }
            let param = params
                .get_mut(name)
                .ok_or_else(|| TrainError::BadConfig(format!("gradient for unknown {name}")))?;
            let n = param.numel();
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            let p = param.data_mut();
            for i in 0..n {
                let g = grad.data()[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
        Ok(())
    }
}
