use crate::error::{ModelError, Result};
use crate::spec::ModelSpec;
use std::collections::BTreeMap;
use tsc_tensor::Tensor;

/// Bookkeeping carried with a trained model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMeta {
    pub epochs_seen: usize,
    /// Tag of the checkpoint the parameters come from, e.g.
    /// `best_train_loss@153`.
    pub checkpoint_tag: String,
}

/// A model: its spec, named parameters, and batch-norm running statistics.
///
/// Parameter and statistic maps are ordered by name so that every iteration
/// (initialization, optimizer steps, serialization) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub spec: ModelSpec,
    pub params: BTreeMap<String, Tensor>,
    pub running: BTreeMap<String, Tensor>,
    pub train_meta: TrainMeta,
}

impl ModelState {
    pub fn param(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .ok_or_else(|| ModelError::MissingParameter(name.to_string()))
    }

    pub fn param_count(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Number of batch-norm parameter tensors (gamma/beta), across all BN
    /// sets.
    pub fn bn_param_tensors(&self) -> usize {
        self.params
            .keys()
            .filter(|k| k.ends_with(".gamma") || k.ends_with(".beta") || k.contains(".gamma@") || k.contains(".beta@"))
            .count()
    }

    /// Replaces the classification head with a freshly shaped one for
    /// `n_classes` outputs (zero-filled; initialize before training).
    pub fn replace_head(&mut self, n_classes: usize) -> Result<()> {
        let features = self.param("head.weight")?.shape()[1];
        self.spec.n_classes = n_classes;
        self.params
            .insert("head.weight".into(), Tensor::zeros(&[n_classes, features]));
        self.params
            .insert("head.bias".into(), Tensor::zeros(&[n_classes]));
        Ok(())
    }
}
