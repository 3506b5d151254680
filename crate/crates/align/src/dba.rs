//! DTW barycenter averaging, plain and weighted.

use crate::dtw::{dtw, dtw_cost, medoid};
use crate::error::{AlignError, Result};
use tsc_data::TimeSeries;

/// Default refinement count; the average has converged well before this on
/// the set sizes this crate targets.
pub const DBA_ITERATIONS: usize = 10;

/// One barycenter refinement: re-associate every series element to the
/// average via DTW, then replace each average element by the weighted mean
/// of its associated elements.
fn refine(average: &TimeSeries, set: &[TimeSeries], weights: &[f64]) -> Result<TimeSeries> {
    let dims = average.dims();
    let t = average.len();
    let mut num = vec![0.0; dims * t];
    let mut den = vec![0.0; t];
    for (series, &w) in set.iter().zip(weights) {
        let (_, path) = dtw(average, series)?;
        for &(c, d) in &path.points {
            for dim in 0..dims {
                num[dim * t + c] += w * series.at(dim, d);
            }
            den[c] += w;
        }
    }
    let mut values = vec![0.0; dims * t];
    for c in 0..t {
        for dim in 0..dims {
            values[dim * t + c] = num[dim * t + c] / den[c];
        }
    }
    Ok(TimeSeries::multivariate(dims, values).expect("length preserved"))
}

/// Summed DTW cost from `average` to every member, scaled by the member
/// weights. This is the quantity each refinement step does not increase.
pub fn dba_loss(average: &TimeSeries, set: &[TimeSeries], weights: &[f64]) -> Result<f64> {
    let mut loss = 0.0;
    for (series, &w) in set.iter().zip(weights) {
        loss += w * dtw_cost(average, series)?;
    }
    Ok(loss)
}

/// Weighted DBA. Weights are normalized to sum 1 before use; `init` seeds
/// the average (medoid when `None`) and fixes its length.
pub fn dba_weighted(
    set: &[TimeSeries],
    weights: &[f64],
    init: Option<&TimeSeries>,
    iterations: usize,
) -> Result<TimeSeries> {
    if set.is_empty() {
        return Err(AlignError::EmptySet);
    }
    assert_eq!(set.len(), weights.len(), "one weight per series");
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut average = match init {
        Some(s) => s.clone(),
        None => set[medoid(set)?].clone(),
    };
    for _ in 0..iterations {
        average = refine(&average, set, &weights)?;
    }
    Ok(average)
}

/// Plain DBA: uniform weights, medoid initialization by default.
pub fn dba(set: &[TimeSeries], init: Option<&TimeSeries>, iterations: usize) -> Result<TimeSeries> {
    let weights = vec![1.0; set.len()];
    dba_weighted(set, &weights, init, iterations)
}
