//! Glorot uniform initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsc_models::ModelState;
use tsc_tensor::Tensor;

/// Fan-in/fan-out bound for one parameter tensor: convolution kernels
/// `[C_out, C_in, L]` use `fan = channels * kernel_length`, dense weights
/// `[K, F]` use the layer widths.
fn glorot_bound(shape: &[usize]) -> Option<f64> {
    match shape.len() {
        2 => {
            let (fan_out, fan_in) = (shape[0], shape[1]);
            Some((6.0 / (fan_in + fan_out) as f64).sqrt())
        }
        3 => {
            let (c_out, c_in, l) = (shape[0], shape[1], shape[2]);
            Some((6.0 / ((c_in * l + c_out * l) as f64)).sqrt())
        }
        _ => None,
    }
}

/// Initializes every parameter matching `predicate`: weights uniform in
/// `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`, biases and BN shifts
/// zero, BN scales one. Parameters are visited in name order, so a seed
/// fixes the whole initialization.
pub fn glorot_uniform_init_where<F>(state: &mut ModelState, seed: u64, predicate: F)
where
    F: Fn(&str) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = state.params.keys().cloned().collect();
    for name in names {
        if !predicate(&name) {
            continue;
        }
        let tensor = state.params.get_mut(&name).unwrap();
        let shape = tensor.shape().to_vec();
        if name.ends_with(".weight") {
            if let Some(a) = glorot_bound(&shape) {
                let data: Vec<f64> = (0..tensor.numel()).map(|_| rng.gen_range(-a..a)).collect();
                *tensor = Tensor::from_vec(&shape, data).unwrap();
                continue;
            }
        }
        if name.ends_with(".gamma") {
            *tensor = Tensor::full(&shape, 1.0);
        } else {
            *tensor = Tensor::zeros(&shape);
        }
    }
}

/// Glorot-initializes the whole model.
pub fn glorot_uniform_init(state: &mut ModelState, seed: u64) {
    glorot_uniform_init_where(state, seed, |_| true);
}
