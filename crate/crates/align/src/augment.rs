//! Synthetic series generation by weighted DBA ("Average Selected").

use crate::dba::{dba_weighted, DBA_ITERATIONS};
use crate::dtw::dtw_cost;
use crate::error::{AlignError, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsc_data::{LabeledDataset, TimeSeries};

/// Picks the seed series and assigns the Average Selected weights:
/// 0.5 to the seed, 0.15 to each of 2 randomly chosen members of its 5
/// DTW-nearest neighbors, the remaining 0.2 shared equally by the rest.
///
/// Degenerate sizes: fewer than 6 members use `min(5, n-1)` neighbors;
/// with fewer than 3 members the whole non-seed mass is spread equally.
/// Weights are normalized to sum 1.
pub fn average_selected_weights(set: &[TimeSeries], seed: u64) -> Result<(usize, Vec<f64>)> {
    if set.is_empty() {
        return Err(AlignError::EmptySet);
    }
    let n = set.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seed_idx = rng.gen_range(0..n);
    let mut weights = vec![0.0; n];
    weights[seed_idx] = 0.5;
    if n == 1 {
        weights[seed_idx] = 1.0;
        return Ok((seed_idx, weights));
    }
    if n == 2 {
        weights[1 - seed_idx] = 0.5;
        return Ok((seed_idx, weights));
    }
    // nearest neighbors of the seed, ties toward the lower index
    let mut by_dist: Vec<(f64, usize)> = (0..n)
        .filter(|&i| i != seed_idx)
        .map(|i| Ok((dtw_cost(&set[seed_idx], &set[i])?, i)))
        .collect::<Result<_>>()?;
    by_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let k_nn = 5.min(n - 1);
    let neighbors: Vec<usize> = by_dist[..k_nn].iter().map(|&(_, i)| i).collect();
    let chosen: Vec<usize> = neighbors.choose_multiple(&mut rng, 2).copied().collect();
    for &i in &chosen {
        weights[i] = 0.15;
    }
    let rest: Vec<usize> = (0..n)
        .filter(|&i| i != seed_idx && !chosen.contains(&i))
        .collect();
    if !rest.is_empty() {
        let share = 0.2 / rest.len() as f64;
        for i in rest {
            weights[i] = share;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok((seed_idx, weights))
}

/// Generates one synthetic member of the class: a weighted DTW barycenter
/// initialized at the seed series.
pub fn weighted_dba_augment(class_set: &[TimeSeries], seed: u64) -> Result<TimeSeries> {
    let (seed_idx, weights) = average_selected_weights(class_set, seed)?;
    if class_set.len() == 1 {
        return Ok(class_set[0].clone());
    }
    dba_weighted(
        class_set,
        &weights,
        Some(&class_set[seed_idx]),
        DBA_ITERATIONS,
    )
}

/// Grows every class to twice the size of the most represented class.
/// Originals come first, synthetics are appended per class in generation
/// order; all labels are preserved.
pub fn augment_dataset(dataset: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let max_size = (0..dataset.n_classes())
        .map(|c| dataset.class_indices(c).len())
        .max()
        .unwrap_or(0);
    let target = 2 * max_size;
    let mut series: Vec<TimeSeries> = dataset.series().to_vec();
    let mut labels: Vec<usize> = dataset.labels().to_vec();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    for class in 0..dataset.n_classes() {
        let members = dataset.class_members(class);
        if members.is_empty() {
            return Err(AlignError::EmptyClass {
                dataset: dataset.name.clone(),
                class,
            });
        }
        let mut count = members.len();
        while count < target {
            let sub_seed: u64 = master.gen();
            series.push(weighted_dba_augment(&members, sub_seed)?);
            labels.push(class);
            count += 1;
        }
    }
    let n_classes = dataset.n_classes();
    Ok(
        LabeledDataset::new(format!("{}_aug", dataset.name), series, labels, n_classes)
            .expect("augmented dataset is well formed"),
    )
}
