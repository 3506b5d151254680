use crate::error::{DataError, Result};

/// A D-dimensional real-valued sequence of length T, stored row-major as a
/// `D x T` matrix. Univariate series have `D = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dims: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::multivariate(1, values)
    }

    pub fn multivariate(dims: usize, values: Vec<f64>) -> Result<Self> {
        if dims == 0 || values.is_empty() || values.len() % dims != 0 {
            return Err(DataError::BadSeriesShape {
                dims,
                len: values.len(),
            });
        }
        Ok(TimeSeries { dims, values })
    }

    /// Builds a series from one row per dimension; rows of unequal length
    /// are linearly interpolated up to the longest row.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.is_empty()) {
            return Err(DataError::BadSeriesShape {
                dims: rows.len(),
                len: 0,
            });
        }
        let t = rows.iter().map(|r| r.len()).max().unwrap();
        let mut values = Vec::with_capacity(rows.len() * t);
        for row in &rows {
            if row.len() == t {
                values.extend_from_slice(row);
            } else {
                values.extend(interpolate_to(row, t));
            }
        }
        TimeSeries::multivariate(rows.len(), values)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One dimension's values over time.
    pub fn dim(&self, d: usize) -> &[f64] {
        let t = self.len();
        &self.values[d * t..(d + 1) * t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, d: usize, t: usize) -> f64 {
        self.values[d * self.len() + t]
    }

    /// Squared Euclidean distance between timestamp `i` of `self` and
    /// timestamp `j` of `other` across all dimensions.
    pub fn sq_dist_at(&self, i: usize, other: &TimeSeries, j: usize) -> f64 {
        let mut acc = 0.0;
        for d in 0..self.dims {
            let diff = self.at(d, i) - other.at(d, j);
            acc += diff * diff;
        }
        acc
    }

    /// Plain squared Euclidean distance between two equal-length series.
    pub fn sq_euclidean(&self, other: &TimeSeries) -> f64 {
        self.values
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Linearly resamples every dimension onto a uniform grid of `t_new`
    /// points spanning the original extent.
    pub fn stretched_to(&self, t_new: usize) -> TimeSeries {
        if t_new == self.len() {
            return self.clone();
        }
        let mut values = Vec::with_capacity(self.dims * t_new);
        for d in 0..self.dims {
            values.extend(interpolate_to(self.dim(d), t_new));
        }
        TimeSeries {
            dims: self.dims,
            values,
        }
    }
}

fn interpolate_to(row: &[f64], t_new: usize) -> Vec<f64> {
    if row.len() == 1 {
        return vec![row[0]; t_new];
    }
    if t_new == 1 {
        return vec![row[0]];
    }
    let scale = (row.len() - 1) as f64 / (t_new - 1) as f64;
    (0..t_new)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(row.len() - 1);
            let frac = pos - lo as f64;
            row[lo] * (1.0 - frac) + row[hi] * frac
        })
        .collect()
}

/// A train or test split: series with dense integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    series: Vec<TimeSeries>,
    labels: Vec<usize>,
    n_classes: usize,
    /// Set when the source rows had unequal lengths.
    pub variable_length: bool,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        series: Vec<TimeSeries>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if series.len() != labels.len() {
            return Err(DataError::LabelCountMismatch {
                series: series.len(),
                labels: labels.len(),
            });
        }
        if series.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::LabelOutOfRange {
                label: bad,
                classes: n_classes,
            });
        }
        let dims = series[0].dims();
        if series.iter().any(|s| s.dims() != dims) {
            return Err(DataError::MixedDimensionality);
        }
        let variable_length = series.iter().any(|s| s.len() != series[0].len());
        Ok(LabeledDataset {
            name: name.into(),
            series,
            labels,
            n_classes,
            variable_length,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dims(&self) -> usize {
        self.series[0].dims()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> (&TimeSeries, usize) {
        (&self.series[i], self.labels[i])
    }

    /// Indices of the members of one class, in dataset order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn class_members(&self, class: usize) -> Vec<TimeSeries> {
        self.class_indices(class)
            .into_iter()
            .map(|i| self.series[i].clone())
            .collect()
    }
}
