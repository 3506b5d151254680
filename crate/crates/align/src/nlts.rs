//! Non-linear temporal scaling: multiple alignment of a set against its DBA
//! average, expressed as per-timestamp duplication schedules.
//!
//! The average is refined by DBA (medoid init) and stretched to the longest
//! member's length `T`. Each series is then aligned to the average with a
//! dilation-only dynamic program whose steps either advance the average
//! index alone (duplicating the current series element) or advance both.
//! This is the DTW alignment restricted to never map two series elements to
//! one average element, which is what makes every schedule total exactly `T`
//! with every count at least 1; when the unrestricted DTW path already has
//! that property the two alignments coincide.

use crate::dba::{dba, DBA_ITERATIONS};
use crate::error::{AlignError, Result};
use std::fmt::Write as _;
use tsc_data::TimeSeries;

/// Duplication schedules dilating every input series to `target_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSchedule {
    /// `counts[i][d]` = how many times timestamp `d` of series `i` appears
    /// in the dilated output. Each row sums to `target_length`.
    pub counts: Vec<Vec<usize>>,
    pub target_length: usize,
}

impl AlignmentSchedule {
    /// Replays one schedule: repeats every timestamp of `series` by its
    /// duplication count, in order.
    pub fn dilate(&self, index: usize, series: &TimeSeries) -> TimeSeries {
        let counts = &self.counts[index];
        let dims = series.dims();
        let mut values = vec![0.0; dims * self.target_length];
        for dim in 0..dims {
            let mut pos = 0;
            for (d, &count) in counts.iter().enumerate() {
                for _ in 0..count {
                    values[dim * self.target_length + pos] = series.at(dim, d);
                    pos += 1;
                }
            }
            debug_assert_eq!(pos, self.target_length);
        }
        TimeSeries::multivariate(dims, values).expect("dilated shape")
    }

    /// `timestamp,count` rows for one series.
    pub fn to_csv(&self, index: usize) -> String {
        let mut out = String::from("timestamp,count\n");
        for (d, &count) in self.counts[index].iter().enumerate() {
            let _ = writeln!(out, "{d},{count}");
        }
        out
    }
}

pub struct NltsResult {
    pub average: TimeSeries,
    pub schedule: AlignmentSchedule,
    pub dilated: Vec<TimeSeries>,
}

/// Aligns the average (length `T`) onto one series (length `<= T`): every
/// average element maps to exactly one series element, mappings are
/// monotone, and every series element is covered. Returns the per-element
/// duplication counts. Ties prefer the diagonal step.
fn dilation_counts(average: &TimeSeries, series: &TimeSeries) -> Vec<usize> {
    let t_avg = average.len();
    let t_s = series.len();
    debug_assert!(t_s <= t_avg);
    let inf = f64::INFINITY;
    let mut dp = vec![inf; t_avg * t_s];
    dp[0] = average.sq_dist_at(0, series, 0);
    for c in 1..t_avg {
        for d in 0..t_s.min(c + 1) {
            let cell = average.sq_dist_at(c, series, d);
            let stay = dp[(c - 1) * t_s + d];
            let advance = if d > 0 { dp[(c - 1) * t_s + d - 1] } else { inf };
            let best = stay.min(advance);
            if best < inf {
                dp[c * t_s + d] = best + cell;
            }
        }
    }
    let mut counts = vec![0usize; t_s];
    let mut d = t_s - 1;
    counts[d] = 1;
    for c in (1..t_avg).rev() {
        let stay = dp[(c - 1) * t_s + d];
        let advance = if d > 0 { dp[(c - 1) * t_s + d - 1] } else { inf };
        if advance <= stay {
            d -= 1;
        }
        counts[d] += 1;
    }
    debug_assert_eq!(d, 0);
    counts
}

/// Computes the compact multiple alignment of a set of series: the DBA
/// average stretched to the longest member, plus a duplication schedule per
/// series that dilates it to the average's length.
pub fn nlts(set: &[TimeSeries]) -> Result<NltsResult> {
    if set.len() < 2 {
        return Err(AlignError::SetTooSmall(set.len()));
    }
    let t_max = set.iter().map(|s| s.len()).max().unwrap();
    let average = dba(set, None, DBA_ITERATIONS)?.stretched_to(t_max);
    let mut counts = Vec::with_capacity(set.len());
    let mut dilated = Vec::with_capacity(set.len());
    for series in set {
        let c = dilation_counts(&average, series);
        counts.push(c);
    }
    let schedule = AlignmentSchedule {
        counts,
        target_length: t_max,
    };
    for (i, series) in set.iter().enumerate() {
        dilated.push(schedule.dilate(i, series));
    }
    Ok(NltsResult {
        average,
        schedule,
        dilated,
    })
}
