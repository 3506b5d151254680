//! Normalization and length equalization.

use crate::series::{LabeledDataset, TimeSeries};

/// Standard-deviation floor used when a dimension is constant; the output
/// of such a dimension is all zeros.
pub const STD_FLOOR: f64 = 1e-8;

/// Rescales each dimension to zero mean and unit (population) standard
/// deviation over time.
pub fn z_normalize(series: &TimeSeries) -> TimeSeries {
    let t = series.len();
    let mut values = Vec::with_capacity(series.dims() * t);
    for d in 0..series.dims() {
        let row = series.dim(d);
        let mean = row.iter().sum::<f64>() / t as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
        let std = var.sqrt().max(STD_FLOOR);
        values.extend(row.iter().map(|v| (v - mean) / std));
    }
    TimeSeries::multivariate(series.dims(), values).expect("shape preserved")
}

/// Applies [`z_normalize`] to every series in the dataset.
pub fn z_normalize_dataset(dataset: &LabeledDataset) -> LabeledDataset {
    let series = dataset.series().iter().map(z_normalize).collect();
    LabeledDataset::new(
        dataset.name.clone(),
        series,
        dataset.labels().to_vec(),
        dataset.n_classes(),
    )
    .expect("shape preserved")
}

/// Stretches every series to the longest length in the dataset by linear
/// interpolation over a uniform parameter grid, per dimension.
pub fn equalize_lengths(dataset: &LabeledDataset) -> LabeledDataset {
    let t_max = dataset.series().iter().map(|s| s.len()).max().unwrap();
    let series = dataset
        .series()
        .iter()
        .map(|s| s.stretched_to(t_max))
        .collect();
    LabeledDataset::new(
        dataset.name.clone(),
        series,
        dataset.labels().to_vec(),
        dataset.n_classes(),
    )
    .expect("shape preserved")
}

/// The standard ingestion pipeline: equalize lengths, then z-normalize.
pub fn prepare(dataset: &LabeledDataset) -> LabeledDataset {
    z_normalize_dataset(&equalize_lengths(dataset))
}
