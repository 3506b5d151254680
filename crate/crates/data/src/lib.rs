//! Dataset ingestion and generation for time-series classification.
//!
//! Supports the UCR univariate file layout, a simple multivariate directory
//! layout, z-normalization, length equalization by linear interpolation, and
//! a synthetic pattern-injection benchmark generator.

mod error;
mod preprocess;
mod series;
mod synthetic;
mod ucr;

pub use error::{DataError, Result};
pub use preprocess::{equalize_lengths, prepare, z_normalize, z_normalize_dataset, STD_FLOOR};
pub use series::{LabeledDataset, TimeSeries};
pub use synthetic::{
    generate_synthetic, SyntheticDataset, NOISE_HIGH, PATTERN_AMPLITUDE, PATTERN_FRACTION,
};
pub use ucr::{load_mts_dir, load_ucr, remap_labels, save_ucr, Delimiter};

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn ucr_labels_remap_ascending() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy_TRAIN.tsv");
        fs::write(&path, "2\t0.1\t0.2\n1\t0.3\t0.4\n").unwrap();
        let ds = load_ucr(&path, Delimiter::Auto).unwrap();
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.series()[0].dim(0), &[0.1, 0.2]);
    }

    #[test]
    fn ucr_comma_autodetect_and_trailing_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        fs::write(&path, "0,1.5,2.5,,\n1,3.5,4.5\n").unwrap();
        let ds = load_ucr(&path, Delimiter::Auto).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.series()[0].len(), 2);
    }

    #[test]
    fn ucr_variable_length_rows_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("var.tsv");
        fs::write(&path, "0\t1\t2\t3\n1\t1\t2\t3\t4\t5\n").unwrap();
        let ds = load_ucr(&path, Delimiter::Auto).unwrap();
        assert!(ds.variable_length);
    }

    #[test]
    fn ucr_bad_cell_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        fs::write(&path, "0\t1.0\tseven\n").unwrap();
        let err = load_ucr(&path, Delimiter::Auto).unwrap_err();
        match err {
            DataError::BadCell { row, column, token } => {
                assert_eq!((row, column), (0, 2));
                assert_eq!(token, "seven");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn ucr_rejects_nan_tokens_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.tsv");
        fs::write(&path, "0\t1.0\tNaN\n").unwrap();
        assert!(matches!(
            load_ucr(&path, Delimiter::Auto),
            Err(DataError::BadCell { .. })
        ));
        let empty = dir.path().join("empty.tsv");
        fs::write(&empty, "").unwrap();
        assert!(matches!(
            load_ucr(&empty, Delimiter::Auto),
            Err(DataError::EmptyFile(_))
        ));
    }

    #[test]
    fn ucr_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let synth = generate_synthetic(3, 40, 2, &[0, 20], 99).unwrap();
        let path = dir.path().join("rt.tsv");
        save_ucr(&synth.dataset, &path).unwrap();
        let back = load_ucr(&path, Delimiter::Auto).unwrap();
        assert_eq!(back.len(), synth.dataset.len());
        for (a, b) in back.series().iter().zip(synth.dataset.series()) {
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(back.labels(), synth.dataset.labels());
        // save -> load -> save is byte-identical
        let path2 = dir.path().join("rt2.tsv");
        save_ucr(&back, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn mts_dir_loads_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("dim_1.txt"), "1\t2\t3\n4\t5\t6\n").unwrap();
        fs::write(dir.path().join("dim_2.txt"), "7\t8\t9\n1\t1\t1\n").unwrap();
        fs::write(dir.path().join("labels.txt"), "5\n7\n").unwrap();
        let ds = load_mts_dir(dir.path()).unwrap();
        assert_eq!(ds.dims(), 2);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.series()[0].dim(1), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn mts_dir_missing_labels_errors() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("dim_1.txt"), "1\t2\n").unwrap();
        assert!(matches!(
            load_mts_dir(dir.path()),
            Err(DataError::MissingLabels(_))
        ));
    }

    #[test]
    fn mts_dir_row_count_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("dim_1.txt"), "1\t2\n3\t4\n").unwrap();
        fs::write(dir.path().join("dim_2.txt"), "1\t2\n").unwrap();
        fs::write(dir.path().join("labels.txt"), "0\n1\n").unwrap();
        assert!(matches!(
            load_mts_dir(dir.path()),
            Err(DataError::DimensionRowMismatch { .. })
        ));
    }

    #[test]
    fn mts_ragged_dimensions_are_interpolated() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("dim_1.txt"), "0\t1\n").unwrap();
        fs::write(dir.path().join("dim_2.txt"), "0\t1\t2\n").unwrap();
        fs::write(dir.path().join("labels.txt"), "0\n").unwrap();
        let ds = load_mts_dir(dir.path()).unwrap();
        assert_eq!(ds.series()[0].len(), 3);
        assert_eq!(ds.series()[0].dim(0), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn z_normalize_zero_mean_unit_std() {
        let s = TimeSeries::univariate(vec![1.0, 2.0, 3.0]).unwrap();
        let z = z_normalize(&s);
        let mean: f64 = z.dim(0).iter().sum::<f64>() / 3.0;
        let var: f64 = z.dim(0).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn z_normalize_constant_series_is_zeroed() {
        let s = TimeSeries::univariate(vec![4.0; 10]).unwrap();
        let z = z_normalize(&s);
        assert!(z.dim(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn z_normalize_is_idempotent() {
        let s = TimeSeries::univariate(vec![0.4, -1.2, 3.3, 0.0, 2.0]).unwrap();
        let once = z_normalize(&s);
        let twice = z_normalize(&once);
        for (a, b) in once.dim(0).iter().zip(twice.dim(0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn equalize_stretches_by_linear_interpolation() {
        let short = TimeSeries::univariate(vec![0.0, 1.0]).unwrap();
        assert_eq!(short.stretched_to(3).dim(0), &[0.0, 0.5, 1.0]);
        let s = TimeSeries::univariate(vec![0.0, 3.0, 6.0]).unwrap();
        assert_eq!(s.stretched_to(5).dim(0), &[0.0, 1.5, 3.0, 4.5, 6.0]);
    }

    #[test]
    fn equalize_identity_on_equal_lengths() {
        let series = vec![
            TimeSeries::univariate(vec![1.0, 2.0]).unwrap(),
            TimeSeries::univariate(vec![3.0, 4.0]).unwrap(),
        ];
        let ds = LabeledDataset::new("x", series.clone(), vec![0, 1], 2).unwrap();
        let eq = equalize_lengths(&ds);
        assert_eq!(eq.series(), ds.series());
    }

    #[test]
    fn synthetic_pattern_geometry() {
        let synth = generate_synthetic(4, 100, 2, &[10, 60], 7).unwrap();
        assert_eq!(synth.windows[0], (10, 20)); // 10% of 100
        for (series, &label) in synth.dataset.series().iter().zip(synth.dataset.labels()) {
            let (start, end) = synth.windows[label];
            for (t, &v) in series.dim(0).iter().enumerate() {
                if t >= start && t < end {
                    assert!(v >= 0.9, "pattern value {v} below amplitude");
                } else {
                    assert!((0.0..=NOISE_HIGH).contains(&v), "noise value {v}");
                }
            }
        }
    }

    #[test]
    fn synthetic_is_deterministic_per_seed() {
        let a = generate_synthetic(3, 64, 2, &[0, 32], 42).unwrap();
        let b = generate_synthetic(3, 64, 2, &[0, 32], 42).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate_synthetic(3, 64, 2, &[0, 32], 43).unwrap();
        assert_ne!(a.dataset, c.dataset);
        // pattern windows still match across seeds
        for ((sa, &la), sc) in a
            .dataset
            .series()
            .iter()
            .zip(a.dataset.labels())
            .zip(c.dataset.series())
        {
            let (start, end) = a.windows[la];
            assert_eq!(&sa.dim(0)[start..end], &sc.dim(0)[start..end]);
        }
    }

    #[test]
    fn synthetic_identical_windows_error() {
        assert!(matches!(
            generate_synthetic(2, 50, 2, &[10, 10], 1),
            Err(DataError::IndistinguishableClasses { .. })
        ));
        assert!(matches!(
            generate_synthetic(2, 50, 2, &[10, 48], 1),
            Err(DataError::WindowOutOfBounds { .. })
        ));
    }

    #[test]
    fn synthetic_one_nn_separability() {
        let synth = generate_synthetic(5, 80, 3, &[0, 30, 60], 11).unwrap();
        let ds = &synth.dataset;
        let mut correct = 0;
        for i in 0..ds.len() {
            let mut best = (f64::INFINITY, 0usize);
            for j in 0..ds.len() {
                if i == j {
                    continue;
                }
                let d = ds.series()[i].sq_euclidean(&ds.series()[j]);
                if d < best.0 {
                    best = (d, ds.labels()[j]);
                }
            }
            if best.1 == ds.labels()[i] {
                correct += 1;
            }
        }
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn pipeline_preserves_order() {
        let synth = generate_synthetic(3, 30, 2, &[0, 15], 5).unwrap();
        let prepared = prepare(&synth.dataset);
        assert_eq!(prepared.labels(), synth.dataset.labels());
        assert_eq!(prepared.len(), synth.dataset.len());
    }
}
