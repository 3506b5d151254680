//! Bridges between datasets and tensors.

use crate::error::Result;
use tsc_data::{LabeledDataset, TimeSeries};
use tsc_tensor::Tensor;

/// Stacks equal-length series into an `[N, D, T]` batch.
pub fn batch_tensor(series: &[&TimeSeries]) -> Result<Tensor> {
    let n = series.len();
    let d = series[0].dims();
    let t = series[0].len();
    let mut data = Vec::with_capacity(n * d * t);
    for s in series {
        data.extend_from_slice(s.values());
    }
    Ok(Tensor::from_vec(&[n, d, t], data)?)
}

/// The whole dataset as one `[N, D, T]` batch.
pub fn dataset_tensor(dataset: &LabeledDataset) -> Result<Tensor> {
    let refs: Vec<&TimeSeries> = dataset.series().iter().collect();
    batch_tensor(&refs)
}

/// One series as a `[1, D, T]` batch.
pub fn single_tensor(series: &TimeSeries) -> Result<Tensor> {
    batch_tensor(&[series])
}

/// Dense one-hot rows; each row sums to exactly 1.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Tensor {
    let mut data = vec![0.0; labels.len() * n_classes];
    for (i, &l) in labels.iter().enumerate() {
        data[i * n_classes + l] = 1.0;
    }
    Tensor::from_vec(&[labels.len(), n_classes], data).expect("one-hot shape")
}
