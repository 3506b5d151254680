//! Probability-averaging ensembles.

use crate::error::{ModelError, Result};
use crate::state::ModelState;
use tsc_tensor::Tensor;

/// Averages member probabilities elementwise in member order:
/// `y_c = (1/n) * sum_j sigma_c(x, theta_j)`.
pub fn ensemble_predict(models: &[ModelState], input: &Tensor) -> Result<Tensor> {
    if models.is_empty() {
        return Err(ModelError::EmptyEnsemble);
    }
    let k = models[0].spec.n_classes;
    for m in &models[1..] {
        if m.spec.n_classes != k {
            return Err(ModelError::EnsembleClassMismatch {
                a: k,
                b: m.spec.n_classes,
            });
        }
    }
    let mut acc: Option<Tensor> = None;
    for model in models {
        let probs = model.predict(input)?;
        acc = Some(match acc {
            None => probs,
            Some(mut sum) => {
                for (s, p) in sum.data_mut().iter_mut().zip(probs.data()) {
                    *s += p;
                }
                sum
            }
        });
    }
    let mut avg = acc.unwrap();
    let n = models.len() as f64;
    for v in avg.data_mut() {
        *v /= n;
    }
    Ok(avg)
}
