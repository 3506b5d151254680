//! Receptive-field arithmetic for stride-1 convolution stacks:
//! `RF = 1 + sum_i (k_i - 1)`.

use crate::spec::{Architecture, ModelSpec};
use crate::build::{FCN_LAYOUT, RESNET_KERNELS};

/// Receptive field of one output timestamp before global pooling.
///
/// Inception modules contribute their largest kernel per layer (the max
/// pooling branch counts as a kernel of 3, so the widest path is reported).
/// The MLP sees the whole input, so its receptive field is the input length.
pub fn receptive_field(spec: &ModelSpec) -> usize {
    match spec.architecture {
        Architecture::Fcn => 1 + FCN_LAYOUT.iter().map(|&(_, k)| k - 1).sum::<usize>(),
        Architecture::ResNet => {
            1 + 3 * RESNET_KERNELS.iter().map(|&k| k - 1).sum::<usize>()
        }
        Architecture::Inception => {
            let largest = spec
                .inception
                .kernel_sizes
                .iter()
                .copied()
                .max()
                .unwrap_or(1)
                .max(3);
            1 + spec.inception.depth * (largest - 1)
        }
        Architecture::Mlp => spec.input_length.unwrap_or(1),
    }
}
