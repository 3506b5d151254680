//! Dynamic time warping.
//!
//! Cell costs are squared Euclidean distances across dimensions (the
//! "dependent" multivariate variant); the reported cost is the raw sum over
//! the optimal path — no square root and no path-length normalization, so
//! only the ordering of costs is meaningful, which is all the consumers
//! (DBA, medoid, similarity ranking) rely on.

use crate::error::{AlignError, Result};
use tsc_data::TimeSeries;

/// A monotone alignment between two series: index pairs from `(0, 0)` to
/// `(m-1, n-1)`, each step advancing at least one index by exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingPath {
    pub points: Vec<(usize, usize)>,
    pub cost: f64,
}

fn check_dims(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(AlignError::EmptySet);
    }
    if a.dims() != b.dims() {
        return Err(AlignError::DimensionalityMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    Ok(())
}

fn cost_matrix(a: &TimeSeries, b: &TimeSeries) -> Vec<f64> {
    let (m, n) = (a.len(), b.len());
    let mut dp = vec![f64::INFINITY; m * n];
    dp[0] = a.sq_dist_at(0, b, 0);
    for j in 1..n {
        dp[j] = dp[j - 1] + a.sq_dist_at(0, b, j);
    }
    for i in 1..m {
        dp[i * n] = dp[(i - 1) * n] + a.sq_dist_at(i, b, 0);
        for j in 1..n {
            let best = dp[(i - 1) * n + j - 1]
                .min(dp[(i - 1) * n + j])
                .min(dp[i * n + j - 1]);
            dp[i * n + j] = best + a.sq_dist_at(i, b, j);
        }
    }
    dp
}

/// DTW cost only; skips path recovery.
pub fn dtw_cost(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    check_dims(a, b)?;
    let dp = cost_matrix(a, b);
    Ok(dp[dp.len() - 1])
}

/// DTW cost and one optimal warping path.
///
/// Backtracking tie-break: prefer the diagonal step, then the step that
/// advances the first series' index, then the second's. Any consistent rule
/// preserves the cost; this one is fixed because alignment schedules depend
/// on it.
pub fn dtw(a: &TimeSeries, b: &TimeSeries) -> Result<(f64, WarpingPath)> {
    check_dims(a, b)?;
    let (m, n) = (a.len(), b.len());
    let dp = cost_matrix(a, b);
    let mut points = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, n - 1);
    points.push((i, j));
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = dp[(i - 1) * n + j - 1];
            let vert = dp[(i - 1) * n + j];
            let horiz = dp[i * n + j - 1];
            let best = diag.min(vert).min(horiz);
            if diag == best {
                i -= 1;
                j -= 1;
            } else if vert == best {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        points.push((i, j));
    }
    points.reverse();
    let cost = dp[(m - 1) * n + n - 1];
    Ok((cost, WarpingPath { points, cost }))
}

/// The set member minimizing the summed DTW cost to all members; ties break
/// toward the lowest index.
pub fn medoid(set: &[TimeSeries]) -> Result<usize> {
    if set.is_empty() {
        return Err(AlignError::EmptySet);
    }
    let mut best = (f64::INFINITY, 0usize);
    for (i, a) in set.iter().enumerate() {
        let mut total = 0.0;
        for (j, b) in set.iter().enumerate() {
            if i != j {
                total += dtw_cost(a, b)?;
            }
        }
        if total < best.0 {
            best = (total, i);
        }
    }
    Ok(best.1)
}
