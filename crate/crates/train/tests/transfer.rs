//! Transfer fine-tuning against from-scratch training on tasks that share
//! their pattern geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsc_data::{z_normalize, LabeledDataset, TimeSeries};
use tsc_models::{build, Architecture, ModelSpec};
use tsc_train::{fine_tune, glorot_uniform_init, train, Monitor, TrainConfig};

/// A shape-discrimination task: one class carries a narrow spike, the other
/// a wide flat bump of similar area, each at a random position under heavy
/// noise. GAP networks are translation invariant, so solving it means
/// learning width-sensitive filters rather than memorizing positions; that
/// is exactly the part a pretrained body already has.
fn shape_task(n_per_class: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = 32;
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2usize {
        for _ in 0..n_per_class {
            let mut values: Vec<f64> = (0..t).map(|_| rng.gen_range(-0.5..0.5)).collect();
            if class == 0 {
                // narrow triangular spike
                let pos = rng.gen_range(2..t - 6);
                for (k, v) in values[pos..pos + 5].iter_mut().enumerate() {
                    *v += 1.5 * (1.0 - (k as f64 - 2.0).abs() / 2.5);
                }
            } else {
                // wide flat bump of similar area
                let pos = rng.gen_range(2..t - 13);
                for v in &mut values[pos..pos + 12] {
                    *v += 0.4;
                }
            }
            series.push(z_normalize(&TimeSeries::univariate(values).unwrap()));
            labels.push(class);
        }
    }
    LabeledDataset::new(format!("shape_{seed}"), series, labels, 2).unwrap()
}

/// Epochs needed to push the train loss under `threshold`; the cap if never.
fn epochs_to_threshold(losses: &[f64], threshold: f64, cap: usize) -> usize {
    losses.iter().position(|&l| l < threshold).unwrap_or(cap)
}

#[test]
fn fine_tuning_converges_faster_than_scratch() {
    let threshold = 0.10;
    let epochs = 50;
    // plenty of source data with the same two shapes
    let source = shape_task(48, 100);

    let config = |seed: u64| TrainConfig {
        epochs,
        batch_size: 16,
        seed,
        ..TrainConfig::default()
    };

    let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
    let mut base = build(&spec).unwrap();
    glorot_uniform_init(&mut base, 42);
    let (pretrained, _) = train(&base, &source, &config(42)).unwrap();

    let mut scratch_epochs = Vec::new();
    let mut tuned_epochs = Vec::new();
    for seed in 0..5 {
        let target = shape_task(32, 200 + seed);

        let mut fresh = build(&spec).unwrap();
        glorot_uniform_init(&mut fresh, seed);
        let (_, scratch_report) = train(&fresh, &target, &config(seed)).unwrap();
        scratch_epochs.push(epochs_to_threshold(
            &scratch_report.monitored(Monitor::BestTrainLoss),
            threshold,
            epochs,
        ));

        let (_, tuned_report) = fine_tune(&pretrained, &target, &config(seed)).unwrap();
        tuned_epochs.push(epochs_to_threshold(
            &tuned_report.monitored(Monitor::BestTrainLoss),
            threshold,
            epochs,
        ));
    }

    scratch_epochs.sort_unstable();
    tuned_epochs.sort_unstable();
    let scratch_median = scratch_epochs[2];
    let tuned_median = tuned_epochs[2];
    assert!(
        tuned_median < scratch_median,
        "fine-tuned median {tuned_median} epochs vs scratch {scratch_median} \
         (tuned {tuned_epochs:?}, scratch {scratch_epochs:?})"
    );
}
