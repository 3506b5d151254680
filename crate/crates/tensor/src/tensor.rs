use crate::error::{Result, TensorError};

/// Dense row-major array of 64-bit floats.
///
/// Shapes used by the networks in this workspace are rank 1 (`[C]` biases),
/// rank 2 (`[N, F]` feature batches), and rank 3 (`[N, C, T]` channelled
/// series batches). Kernels are stored `[C_out, C_in, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

impl Tensor {
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::BadLength {
                shape: shape.to_vec(),
                numel,
                len: data.len(),
            });
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(TensorError::InvalidArgument(format!(
                "zero extent in shape {shape:?}"
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
            requires_grad: false,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
            requires_grad: false,
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
            requires_grad: false,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
            requires_grad: false,
        }
    }

    /// A `[1, 1, T]` batch holding one univariate series.
    pub fn from_series(values: &[f64]) -> Self {
        Tensor {
            shape: vec![1, 1, values.len()],
            data: values.to_vec(),
            requires_grad: false,
        }
    }

    /// Marks the tensor as a differentiation target when pushed on a tape.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for construction and optimizer updates. Tensors already
    /// recorded on a tape must not be mutated.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn expect_rank(&self, expected: usize) -> Result<()> {
        if self.rank() != expected {
            return Err(TensorError::BadRank {
                expected,
                shape: self.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.shape[1] + j]
    }

    pub fn at3(&self, n: usize, c: usize, t: usize) -> f64 {
        debug_assert_eq!(self.rank(), 3);
        self.data[(n * self.shape[1] + c) * self.shape[2] + t]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
