//! Synthetic benchmark generator.
//!
//! Each series is uniform noise in `[0.0, 0.1]`; membership in class `c` is
//! encoded by overwriting a class-specific window with a constant plateau of
//! amplitude 1.0. The pattern length is 10% of the series length, so the
//! receptive field a classifier needs grows with the window separation.

use crate::error::{DataError, Result};
use crate::series::{LabeledDataset, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NOISE_HIGH: f64 = 0.1;
pub const PATTERN_AMPLITUDE: f64 = 1.0;
pub const PATTERN_FRACTION: f64 = 0.10;

/// A generated dataset together with the ground-truth pattern window
/// `[start, end)` of each class, for localization checks.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: LabeledDataset,
    pub windows: Vec<(usize, usize)>,
}

/// Generates `n_per_class` univariate series per class, deterministically in
/// `seed`. `pattern_positions[c]` is the start of class `c`'s window.
pub fn generate_synthetic(
    n_per_class: usize,
    length: usize,
    n_classes: usize,
    pattern_positions: &[usize],
    seed: u64,
) -> Result<SyntheticDataset> {
    if n_classes == 0 || n_per_class == 0 || length == 0 {
        return Err(DataError::InvalidArgument(
            "classes, instances and length must be positive".into(),
        ));
    }
    if pattern_positions.len() != n_classes {
        return Err(DataError::InvalidArgument(format!(
            "{} pattern positions for {} classes",
            pattern_positions.len(),
            n_classes
        )));
    }
    let pattern_len = (PATTERN_FRACTION * length as f64).round() as usize;
    if pattern_len == 0 {
        return Err(DataError::InvalidArgument(format!(
            "length {length} too short for a 10% pattern"
        )));
    }
    let windows: Vec<(usize, usize)> = pattern_positions
        .iter()
        .map(|&start| (start, start + pattern_len))
        .collect();
    for (class, &(start, end)) in windows.iter().enumerate() {
        if end > length {
            return Err(DataError::WindowOutOfBounds {
                class,
                start,
                end,
                length,
            });
        }
    }
    for a in 0..n_classes {
        for b in (a + 1)..n_classes {
            if windows[a] == windows[b] {
                return Err(DataError::IndistinguishableClasses { a, b });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Vec::with_capacity(n_classes * n_per_class);
    let mut labels = Vec::with_capacity(n_classes * n_per_class);
    for class in 0..n_classes {
        let (start, end) = windows[class];
        for _ in 0..n_per_class {
            let mut values: Vec<f64> = (0..length).map(|_| rng.gen_range(0.0..NOISE_HIGH)).collect();
            for v in &mut values[start..end] {
                *v = PATTERN_AMPLITUDE;
            }
            series.push(TimeSeries::univariate(values)?);
            labels.push(class);
        }
    }
    let dataset = LabeledDataset::new(format!("synthetic_{seed}"), series, labels, n_classes)?;
    Ok(SyntheticDataset { dataset, windows })
}
