//! Elastic alignment toolkit: DTW distance and warping paths, DTW barycenter
//! averaging, weighted-DBA data augmentation, NLTS multiple alignment, and
//! an inter-dataset similarity matrix for transfer-source selection.

mod augment;
mod dba;
mod dtw;
mod error;
mod nlts;
mod similarity;

pub use augment::{augment_dataset, average_selected_weights, weighted_dba_augment};
pub use dba::{dba, dba_loss, dba_weighted, DBA_ITERATIONS};
pub use dtw::{dtw, dtw_cost, medoid, WarpingPath};
pub use error::{AlignError, Result};
pub use nlts::{nlts, AlignmentSchedule, NltsResult};
pub use similarity::{
    class_prototypes, dataset_similarity, select_transfer_source, SimilarityMatrix,
};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tsc_data::{LabeledDataset, TimeSeries};

    fn uni(values: &[f64]) -> TimeSeries {
        TimeSeries::univariate(values.to_vec()).unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, len: usize) -> TimeSeries {
        uni(&(0..len).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>())
    }

    /// Exhaustive minimum over all admissible warping paths; the independent
    /// oracle for the DP.
    fn brute_force_dtw(a: &TimeSeries, b: &TimeSeries) -> f64 {
        fn go(a: &TimeSeries, b: &TimeSeries, i: usize, j: usize) -> f64 {
            let here = a.sq_dist_at(i, b, j);
            if i == a.len() - 1 && j == b.len() - 1 {
                return here;
            }
            let mut best = f64::INFINITY;
            if i + 1 < a.len() {
                best = best.min(go(a, b, i + 1, j));
            }
            if j + 1 < b.len() {
                best = best.min(go(a, b, i, j + 1));
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                best = best.min(go(a, b, i + 1, j + 1));
            }
            here + best
        }
        go(a, b, 0, 0)
    }

    #[test]
    fn dtw_identity_is_zero_with_diagonal_path() {
        let x = uni(&[0.5, -1.0, 2.0, 0.0]);
        let (cost, path) = dtw(&x, &x).unwrap();
        assert_eq!(cost, 0.0);
        let diagonal: Vec<(usize, usize)> = (0..4).map(|i| (i, i)).collect();
        assert_eq!(path.points, diagonal);
    }

    #[test]
    fn dtw_absorbs_repeats() {
        let a = uni(&[0.0, 0.0, 1.0]);
        let b = uni(&[0.0, 1.0]);
        let (cost, _) = dtw(&a, &b).unwrap();
        assert_eq!(cost, 0.0);
        assert_eq!(brute_force_dtw(&a, &b), 0.0);
    }

    #[test]
    fn dtw_matches_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..60 {
            let m = rng.gen_range(1..=6);
            let n = rng.gen_range(1..=6);
            let a = random_series(&mut rng, m);
            let b = random_series(&mut rng, n);
            let (cost, path) = dtw(&a, &b).unwrap();
            let oracle = brute_force_dtw(&a, &b);
            assert!(
                (cost - oracle).abs() < 1e-12,
                "dp {cost} vs brute force {oracle}"
            );
            // the reported path realizes the reported cost
            let path_cost: f64 = path
                .points
                .iter()
                .map(|&(i, j)| a.sq_dist_at(i, &b, j))
                .sum();
            assert!((path_cost - cost).abs() < 1e-9);
        }
    }

    #[test]
    fn dtw_is_symmetric_in_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let la = rng.gen_range(2..10);
            let lb = rng.gen_range(2..10);
            let a = random_series(&mut rng, la);
            let b = random_series(&mut rng, lb);
            let ab = dtw_cost(&a, &b).unwrap();
            let ba = dtw_cost(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-9);
        }
    }

    #[test]
    fn dtw_path_satisfies_step_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = random_series(&mut rng, 8);
        let b = random_series(&mut rng, 5);
        let (_, path) = dtw(&a, &b).unwrap();
        assert_eq!(*path.points.first().unwrap(), (0, 0));
        assert_eq!(*path.points.last().unwrap(), (7, 4));
        for w in path.points.windows(2) {
            let di = w[1].0 - w[0].0;
            let dj = w[1].1 - w[0].1;
            assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
    }

    #[test]
    fn dtw_dimensionality_mismatch_errors() {
        let a = uni(&[1.0, 2.0]);
        let b = TimeSeries::multivariate(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            dtw(&a, &b),
            Err(AlignError::DimensionalityMismatch { .. })
        ));
    }

    #[test]
    fn medoid_of_singleton_and_ties() {
        let x = uni(&[1.0, 2.0]);
        assert_eq!(medoid(&[x.clone()]).unwrap(), 0);
        let y = uni(&[50.0, 60.0]);
        // {x, x, y}: both copies of x tie; the lower index wins
        assert_eq!(medoid(&[x.clone(), x.clone(), y]).unwrap(), 0);
    }

    #[test]
    fn medoid_matches_brute_force_row_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let set: Vec<TimeSeries> = (0..4).map(|_| random_series(&mut rng, 5)).collect();
        let chosen = medoid(&set).unwrap();
        let sums: Vec<f64> = (0..4)
            .map(|i| {
                (0..4)
                    .filter(|&j| j != i)
                    .map(|j| dtw_cost(&set[i], &set[j]).unwrap())
                    .sum()
            })
            .collect();
        let best = sums
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(chosen, best);
    }

    #[test]
    fn dba_fixed_points() {
        let x = uni(&[0.2, 1.4, -0.3, 0.9]);
        let avg = dba(&[x.clone()], None, 7).unwrap();
        assert_eq!(avg, x);
        let copies = vec![x.clone(), x.clone(), x.clone()];
        let avg = dba(&copies, None, 5).unwrap();
        for (a, b) in avg.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dba_loss_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for _ in 0..5 {
            let set: Vec<TimeSeries> = (0..3)
                .map(|_| {
                    let len = rng.gen_range(4..9);
                    random_series(&mut rng, len)
                })
                .collect();
            let weights = vec![1.0; set.len()];
            let init = set[medoid(&set).unwrap()].clone();
            let mut avg = init;
            let mut prev = dba_loss(&avg, &set, &weights).unwrap();
            for _ in 0..6 {
                avg = dba_weighted(&set, &weights, Some(&avg), 1).unwrap();
                let loss = dba_loss(&avg, &set, &weights).unwrap();
                assert!(loss <= prev + 1e-9, "loss rose from {prev} to {loss}");
                prev = loss;
            }
        }
    }

    #[test]
    fn weighted_dba_with_equal_weights_is_plain_dba() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let set: Vec<TimeSeries> = (0..4).map(|_| random_series(&mut rng, 6)).collect();
        let plain = dba(&set, None, 10).unwrap();
        let weighted = dba_weighted(&set, &[1.0, 1.0, 1.0, 1.0], None, 10).unwrap();
        assert_eq!(plain, weighted); // bit-for-bit: identical code path
    }

    #[test]
    fn average_selected_weight_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set: Vec<TimeSeries> = (0..10).map(|_| random_series(&mut rng, 8)).collect();
        let (seed_idx, weights) = average_selected_weights(&set, 9).unwrap();
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(weights[seed_idx], 0.5);
        let mut sorted = weights.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(sorted[0], 0.5);
        assert_eq!(sorted[1], 0.15);
        assert_eq!(sorted[2], 0.15);
        for w in &sorted[3..] {
            assert!((w - 0.2 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn augment_singleton_returns_member() {
        let x = uni(&[1.0, 2.0, 3.0]);
        let out = weighted_dba_augment(&[x.clone()], 5).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn augment_stays_near_seed_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // a tight toy class
        let base = random_series(&mut rng, 10);
        let set: Vec<TimeSeries> = (0..6)
            .map(|_| {
                let jitter: Vec<f64> = base
                    .dim(0)
                    .iter()
                    .map(|v| v + rng.gen_range(-0.2..0.2))
                    .collect();
                uni(&jitter)
            })
            .collect();
        for seed in 0..20 {
            let (seed_idx, _) = average_selected_weights(&set, seed).unwrap();
            let generated = weighted_dba_augment(&set, seed).unwrap();
            let to_seed = dtw_cost(&generated, &set[seed_idx]).unwrap();
            let farthest = set
                .iter()
                .map(|s| dtw_cost(&generated, s).unwrap())
                .fold(0.0f64, f64::max);
            assert!(to_seed <= farthest + 1e-12);
        }
    }

    #[test]
    fn augment_dataset_doubles_most_represented_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut series = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..3 {
            series.push(random_series(&mut rng, 7));
            labels.push(0);
        }
        for _ in 0..5 {
            series.push(random_series(&mut rng, 7));
            labels.push(1);
        }
        let ds = LabeledDataset::new("toy", series, labels, 2).unwrap();
        let aug = augment_dataset(&ds, 3).unwrap();
        assert_eq!(aug.class_indices(0).len(), 10);
        assert_eq!(aug.class_indices(1).len(), 10);
        assert_eq!(aug.len(), 20);
        // originals preserved in order
        for i in 0..ds.len() {
            assert_eq!(aug.series()[i], ds.series()[i]);
            assert_eq!(aug.labels()[i], ds.labels()[i]);
        }
    }

    #[test]
    fn augment_single_class_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let series: Vec<TimeSeries> = (0..4).map(|_| random_series(&mut rng, 6)).collect();
        let ds = LabeledDataset::new("one", series, vec![0; 4], 1).unwrap();
        let aug = augment_dataset(&ds, 1).unwrap();
        assert_eq!(aug.len(), 8);
        for s in aug.series() {
            assert_eq!(s.len(), 6);
        }
    }

    #[test]
    fn nlts_identical_copies_gives_all_ones() {
        let x = uni(&[0.1, 0.5, 0.9, 0.3]);
        let result = nlts(&[x.clone(), x.clone()]).unwrap();
        assert_eq!(result.schedule.target_length, 4);
        for counts in &result.schedule.counts {
            assert_eq!(counts, &vec![1usize; 4]);
        }
        for d in &result.dilated {
            assert_eq!(d, &x);
        }
    }

    #[test]
    fn nlts_duplicates_the_shorter_series_once() {
        // y repeats x's second timestamp; the schedule should dilate x by
        // exactly one duplication
        let x = uni(&[0.0, 1.0, 2.0, 3.0]);
        let y = uni(&[0.0, 1.0, 1.0, 2.0, 3.0]);
        let result = nlts(&[x.clone(), y.clone()]).unwrap();
        assert_eq!(result.schedule.target_length, 5);
        let x_counts = &result.schedule.counts[0];
        assert_eq!(x_counts.iter().sum::<usize>(), 5);
        assert_eq!(x_counts.iter().filter(|&&c| c == 2).count(), 1);
        let y_counts = &result.schedule.counts[1];
        assert_eq!(y_counts, &vec![1usize; 5]);
    }

    #[test]
    fn nlts_schedules_total_target_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        for _ in 0..10 {
            let n = rng.gen_range(2..5);
            let set: Vec<TimeSeries> = (0..n)
                .map(|_| {
                    let len = rng.gen_range(3..12);
                    random_series(&mut rng, len)
                })
                .collect();
            let result = nlts(&set).unwrap();
            let t = result.schedule.target_length;
            assert_eq!(result.average.len(), t);
            for (i, counts) in result.schedule.counts.iter().enumerate() {
                assert_eq!(counts.len(), set[i].len());
                assert_eq!(counts.iter().sum::<usize>(), t);
                assert!(counts.iter().all(|&c| c >= 1));
                assert_eq!(result.dilated[i].len(), t);
                // replaying the schedule reproduces the dilated series
                assert_eq!(result.schedule.dilate(i, &set[i]), result.dilated[i]);
            }
        }
    }

    #[test]
    fn nlts_rejects_small_sets() {
        let x = uni(&[1.0, 2.0]);
        assert!(matches!(nlts(&[x]), Err(AlignError::SetTooSmall(1))));
    }

    fn toy_dataset(name: &str, rng: &mut ChaCha8Rng, classes: usize, per_class: usize) -> LabeledDataset {
        let mut series = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            for _ in 0..per_class {
                let vals: Vec<f64> = (0..6)
                    .map(|_| c as f64 * 3.0 + rng.gen_range(-0.5..0.5))
                    .collect();
                series.push(uni(&vals));
                labels.push(c);
            }
        }
        LabeledDataset::new(name, series, labels, classes).unwrap()
    }

    #[test]
    fn similarity_matrix_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(222);
        let datasets = vec![
            toy_dataset("a", &mut rng, 2, 3),
            toy_dataset("b", &mut rng, 3, 2),
            toy_dataset("c", &mut rng, 2, 4),
        ];
        let matrix = dataset_similarity(&datasets).unwrap();
        for i in 0..3 {
            assert_eq!(matrix.get(i, i), 0.0);
            for j in 0..3 {
                assert!(matrix.get(i, j) >= 0.0);
                assert!((matrix.get(i, j) - matrix.get(j, i)).abs() < 1e-9);
            }
        }
        // oracle: recompute each pair from prototypes without the cache
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let pi = class_prototypes(&datasets[i]).unwrap();
                let pj = class_prototypes(&datasets[j]).unwrap();
                let mut best = f64::INFINITY;
                for a in &pi {
                    for b in &pj {
                        best = best.min(dtw_cost(a, b).unwrap());
                    }
                }
                assert!((matrix.get(i, j) - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn similarity_of_single_class_datasets_is_prototype_dtw() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = toy_dataset("a", &mut rng, 1, 3);
        let b = toy_dataset("b", &mut rng, 1, 3);
        let pa = class_prototypes(&a).unwrap();
        let pb = class_prototypes(&b).unwrap();
        let matrix = dataset_similarity(&[a, b]).unwrap();
        let expect = dtw_cost(&pa[0], &pb[0]).unwrap();
        assert!((matrix.get(0, 1) - expect).abs() < 1e-12);
    }

    #[test]
    fn transfer_source_ranks_target_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let datasets = vec![
            toy_dataset("alpha", &mut rng, 2, 2),
            toy_dataset("beta", &mut rng, 2, 2),
            toy_dataset("gamma", &mut rng, 2, 2),
        ];
        let matrix = dataset_similarity(&datasets).unwrap();
        let ranked = select_transfer_source(&matrix, "beta", 10).unwrap();
        assert_eq!(ranked[0], ("beta".to_string(), 0.0));
        assert_eq!(ranked.len(), 3); // k larger than candidates -> full ranking
    }

    #[test]
    fn similarity_csv_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let datasets = vec![toy_dataset("x", &mut rng, 2, 2), toy_dataset("y", &mut rng, 2, 2)];
        let matrix = dataset_similarity(&datasets).unwrap();
        let csv = matrix.to_csv();
        let back = SimilarityMatrix::from_csv(&csv).unwrap();
        assert_eq!(matrix, back);
    }
}
