//! UCR-archive file formats.
//!
//! Univariate files hold one series per line: label first, then the values,
//! tab- or comma-delimited. Multivariate datasets are directories of
//! `dim_<k>.txt` files (values only) plus a `labels.txt` with one label per
//! line.

use crate::error::{DataError, Result};
use crate::series::{LabeledDataset, TimeSeries};
use std::fs;
use std::path::Path;

/// Field delimiter for UCR files; `Auto` inspects the first line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Tab,
    Comma,
}

fn resolve(delimiter: Delimiter, first_line: &str) -> char {
    match delimiter {
        Delimiter::Tab => '\t',
        Delimiter::Comma => ',',
        Delimiter::Auto => {
            if first_line.contains('\t') {
                '\t'
            } else {
                ','
            }
        }
    }
}

fn parse_cell(token: &str, row: usize, column: usize) -> Result<f64> {
    let trimmed = token.trim();
    let value: f64 = trimmed.parse().map_err(|_| DataError::BadCell {
        row,
        column,
        token: trimmed.to_string(),
    })?;
    if value.is_nan() {
        return Err(DataError::BadCell {
            row,
            column,
            token: trimmed.to_string(),
        });
    }
    Ok(value)
}

/// Loads a univariate UCR file. Raw labels may be arbitrary numeric strings;
/// they are remapped to dense ids `0..K-1` in ascending numeric order.
pub fn load_ucr(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(DataError::EmptyFile(path.to_path_buf()));
    }
    let sep = resolve(delimiter, lines[0]);
    let mut raw_labels = Vec::with_capacity(lines.len());
    let mut series = Vec::with_capacity(lines.len());
    for (row, line) in lines.iter().enumerate() {
        let mut fields = line.split(sep).filter(|f| !f.trim().is_empty());
        let label_tok = fields.next().ok_or(DataError::EmptyRow { row })?;
        let label = parse_cell(label_tok, row, 0)?;
        let mut values = Vec::new();
        for (column, tok) in fields.enumerate() {
            values.push(parse_cell(tok, row, column + 1)?);
        }
        if values.is_empty() {
            return Err(DataError::EmptyRow { row });
        }
        raw_labels.push(label);
        series.push(TimeSeries::univariate(values)?);
    }
    let (labels, n_classes) = remap_labels(&raw_labels);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    LabeledDataset::new(name, series, labels, n_classes)
}

/// Dense remap of raw numeric labels, ascending: smallest raw label -> 0.
pub fn remap_labels(raw: &[f64]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let labels = raw
        .iter()
        .map(|v| distinct.iter().position(|d| d == v).unwrap())
        .collect();
    (labels, distinct.len())
}

/// Loads a multivariate dataset directory: `dim_<k>.txt` files (sorted by
/// `k`) plus `labels.txt`.
pub fn load_mts_dir(dir: impl AsRef<Path>) -> Result<LabeledDataset> {
    let dir = dir.as_ref();
    let mut dim_files: Vec<(usize, std::path::PathBuf)> = fs::read_dir(dir)
        .map_err(|source| DataError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let idx: usize = name.strip_prefix("dim_")?.strip_suffix(".txt")?.parse().ok()?;
            Some((idx, e.path()))
        })
        .collect();
    dim_files.sort_by_key(|(idx, _)| *idx);
    if dim_files.is_empty() {
        return Err(DataError::NoDimensionFiles(dir.to_path_buf()));
    }
    let labels_path = dir.join("labels.txt");
    if !labels_path.exists() {
        return Err(DataError::MissingLabels(labels_path));
    }
    let label_text = fs::read_to_string(&labels_path).map_err(|source| DataError::Io {
        path: labels_path.clone(),
        source,
    })?;
    let raw_labels: Vec<f64> = label_text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, l)| parse_cell(l, row, 0))
        .collect::<Result<_>>()?;
    if raw_labels.is_empty() {
        return Err(DataError::EmptyFile(labels_path));
    }

    let mut per_dim_rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(dim_files.len());
    for (_, file) in &dim_files {
        let text = fs::read_to_string(file).map_err(|source| DataError::Io {
            path: file.clone(),
            source,
        })?;
        let sep = resolve(
            Delimiter::Auto,
            text.lines().next().unwrap_or_default(),
        );
        let mut rows = Vec::new();
        for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let mut values = Vec::new();
            for (column, tok) in line
                .split(sep)
                .filter(|f| !f.trim().is_empty())
                .enumerate()
            {
                values.push(parse_cell(tok, row, column)?);
            }
            rows.push(values);
        }
        if rows.len() != raw_labels.len() {
            return Err(DataError::DimensionRowMismatch {
                file: file.file_name().unwrap().to_string_lossy().into_owned(),
                rows: rows.len(),
                expected: raw_labels.len(),
            });
        }
        per_dim_rows.push(rows);
    }

    let mut series = Vec::with_capacity(raw_labels.len());
    for i in 0..raw_labels.len() {
        let rows: Vec<Vec<f64>> = per_dim_rows.iter().map(|d| d[i].clone()).collect();
        series.push(TimeSeries::from_rows(rows)?);
    }
    let (labels, n_classes) = remap_labels(&raw_labels);
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mts".to_string());
    LabeledDataset::new(name, series, labels, n_classes)
}

/// Writes a univariate dataset in UCR format. Values are printed with 17
/// significant digits so that a reload reproduces them exactly.
pub fn save_ucr(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (series, &label) in dataset.series().iter().zip(dataset.labels()) {
        out.push_str(&label.to_string());
        for v in series.dim(0) {
            out.push('\t');
            out.push_str(&format!("{v:.16e}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}
