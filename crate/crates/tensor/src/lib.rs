//! Dense-tensor compute core with reverse-mode automatic differentiation.
//!
//! Just enough machinery for 1-D convolutional classifiers: `[N, C, T]`
//! batches of 64-bit floats, a define-by-run tape, and the primitives the
//! architectures in this workspace need (conv1d, batch norm, ReLU, pooling,
//! dense, softmax, dropout, cross entropy, MSE). No GPU, no broadcasting,
//! no higher-order derivatives.

mod conv;
mod error;
mod tape;
mod tensor;

pub mod check;

pub use error::{Result, TensorError};
pub use tape::{Gradients, Mode, Padding, Tape, Value, LOG_CLAMP};
pub use tensor::Tensor;
