//! Inter-dataset similarity via per-class DBA prototypes.

use crate::dba::{dba, DBA_ITERATIONS};
use crate::dtw::dtw_cost;
use crate::error::{AlignError, Result};
use std::fmt::Write as _;
use tsc_data::{LabeledDataset, TimeSeries};

/// Symmetric non-negative distance matrix over named datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    names: Vec<String>,
    distances: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.names.len() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Header row of names, then the full matrix with 17-significant-digit
    /// floats.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        let n = self.names.len();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", self.get(i, j))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| AlignError::BadCsv("empty".into()))?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = names.len();
        let mut distances = Vec::with_capacity(n * n);
        for line in lines {
            for tok in line.split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| AlignError::BadCsv(format!("bad cell {tok:?}")))?;
                distances.push(v);
            }
        }
        if distances.len() != n * n {
            return Err(AlignError::BadCsv(format!(
                "expected {} cells, got {}",
                n * n,
                distances.len()
            )));
        }
        Ok(SimilarityMatrix { names, distances })
    }
}

/// One DBA prototype per class, computed on the given (train) split.
pub fn class_prototypes(dataset: &LabeledDataset) -> Result<Vec<TimeSeries>> {
    (0..dataset.n_classes())
        .map(|class| {
            let members = dataset.class_members(class);
            if members.is_empty() {
                return Err(AlignError::EmptyClass {
                    dataset: dataset.name.clone(),
                    class,
                });
            }
            dba(&members, None, DBA_ITERATIONS)
        })
        .collect()
}

/// Distance between every pair of datasets: reduce each dataset to its class
/// prototypes, then take the minimum DTW cost over cross-dataset prototype
/// pairs. Each unordered pair is computed once; the diagonal is zero.
pub fn dataset_similarity(datasets: &[LabeledDataset]) -> Result<SimilarityMatrix> {
    let n = datasets.len();
    let prototypes: Vec<Vec<TimeSeries>> = datasets
        .iter()
        .map(class_prototypes)
        .collect::<Result<_>>()?;
    let mut distances = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best = f64::INFINITY;
            for a in &prototypes[i] {
                for b in &prototypes[j] {
                    best = best.min(dtw_cost(a, b)?);
                }
            }
            distances[i * n + j] = best;
            distances[j * n + i] = best;
        }
    }
    Ok(SimilarityMatrix {
        names: datasets.iter().map(|d| d.name.clone()).collect(),
        distances,
    })
}

/// The `k` datasets most similar to `target`, ascending by distance; equal
/// distances order by name. The target itself ranks first at distance 0
/// when present.
pub fn select_transfer_source(
    matrix: &SimilarityMatrix,
    target: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let ti = matrix
        .index_of(target)
        .ok_or_else(|| AlignError::UnknownDataset(target.to_string()))?;
    let mut ranked: Vec<(String, f64)> = (0..matrix.len())
        .map(|j| (matrix.names()[j].clone(), matrix.get(ti, j)))
        .collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k.min(matrix.len()));
    Ok(ranked)
}
