//! Adversarial attacks on trained classifiers (FGSM, BIM) and adversarial
//! training with optional AdvProp-style dual batch normalization.

mod advtrain;
mod attack;
mod error;

pub use advtrain::{adversarial_train, prepare_advprop};
pub use attack::{
    attack_dataset, ball_radius, bim, fgsm, AdversarialSet, AttackConfig, AttackMethod,
};
pub use error::{AttackError, Result};

#[cfg(test)]
mod tests {
    use super::*;
    use tsc_data::{generate_synthetic, prepare, save_ucr, load_ucr, Delimiter};
    use tsc_models::{build, dataset_tensor, Architecture, ModelSpec};
    use tsc_train::{glorot_uniform_init, train, TrainConfig};

    fn toy_model_and_data() -> (tsc_models::ModelState, tsc_data::LabeledDataset) {
        let synth = generate_synthetic(6, 24, 2, &[0, 12], 3).unwrap();
        let dataset = prepare(&synth.dataset);
        let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let mut state = build(&spec).unwrap();
        glorot_uniform_init(&mut state, 1);
        let config = TrainConfig {
            epochs: 40,
            batch_size: 6,
            seed: 1,
            ..TrainConfig::default()
        };
        let (trained, _) = train(&state, &dataset, &config).unwrap();
        (trained, dataset)
    }

    #[test]
    fn zero_epsilon_returns_input_unchanged() {
        let (model, dataset) = toy_model_and_data();
        let input = dataset_tensor(&dataset).unwrap();
        let labels = model.predict_labels(&input).unwrap();
        let out = fgsm(&model, &input, &labels, 0.0).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn fgsm_saturates_the_ball_where_gradient_is_nonzero() {
        let (model, dataset) = toy_model_and_data();
        let input = dataset_tensor(&dataset).unwrap();
        let labels = model.predict_labels(&input).unwrap();
        let eps = 0.1;
        let out = fgsm(&model, &input, &labels, eps).unwrap();
        let mut saturated = 0usize;
        let mut untouched = 0usize;
        for (a, b) in input.data().iter().zip(out.data()) {
            let d = (a - b).abs();
            assert!(d <= eps + 1e-12);
            if (d - eps).abs() < 1e-15 {
                saturated += 1;
            } else if d == 0.0 {
                untouched += 1;
            } else {
                panic!("deviation {d} is neither 0 nor epsilon");
            }
        }
        assert!(saturated > untouched, "gradient almost everywhere nonzero");
    }

    #[test]
    fn bim_single_step_equals_fgsm_bitwise() {
        let (model, dataset) = toy_model_and_data();
        let input = dataset_tensor(&dataset).unwrap();
        let labels = model.predict_labels(&input).unwrap();
        let eps = 0.07;
        let a = fgsm(&model, &input, &labels, eps).unwrap();
        let config = AttackConfig {
            method: AttackMethod::Bim,
            epsilon: eps,
            iterations: 1,
            alpha: Some(eps),
        };
        let b = bim(&model, &input, &labels, &config).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn bim_stays_in_ball_across_iterations() {
        let (model, dataset) = toy_model_and_data();
        let input = dataset_tensor(&dataset).unwrap();
        let labels = model.predict_labels(&input).unwrap();
        let config = AttackConfig::bim(0.1);
        let out = bim(&model, &input, &labels, &config).unwrap();
        assert!(ball_radius(&input, &out) <= 0.1 + 1e-12);
    }

    #[test]
    fn constant_model_leaves_input_unchanged() {
        // zero weights give a constant classifier with zero input gradient
        let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let state = build(&spec).unwrap();
        let synth = generate_synthetic(3, 16, 2, &[0, 8], 5).unwrap();
        let dataset = prepare(&synth.dataset);
        let input = dataset_tensor(&dataset).unwrap();
        let labels = vec![0; dataset.len()];
        let out = fgsm(&state, &input, &labels, 0.1).unwrap();
        assert_eq!(out.data(), input.data());
        let out = bim(&state, &input, &labels, &AttackConfig::bim(0.1)).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn untrained_model_accuracy_is_chance_either_way() {
        let synth = generate_synthetic(20, 24, 2, &[0, 12], 9).unwrap();
        let dataset = prepare(&synth.dataset);
        let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let mut state = build(&spec).unwrap();
        glorot_uniform_init(&mut state, 77);
        let (_, clean_acc, adv_acc) =
            attack_dataset(&state, &dataset, &AttackConfig::fgsm(0.1)).unwrap();
        assert!((clean_acc - 0.5).abs() <= 0.3, "clean {clean_acc}");
        assert!((adv_acc - 0.5).abs() <= 0.3, "adv {adv_acc}");
    }

    #[test]
    fn adversarial_set_roundtrips_through_ucr_export() {
        let (model, dataset) = toy_model_and_data();
        let (adv, _, _) = attack_dataset(&model, &dataset, &AttackConfig::fgsm(0.1)).unwrap();
        assert_eq!(adv.series.len(), dataset.len());
        let exported = adv.to_dataset(&dataset);
        assert!(exported.name.contains("_adv_fgsm_0.1"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adv.tsv");
        save_ucr(&exported, &path).unwrap();
        let back = load_ucr(&path, Delimiter::Auto).unwrap();
        for (a, b) in back.series().iter().zip(exported.series()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn advprop_doubles_bn_parameter_tensors() {
        let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let state = build(&spec).unwrap();
        let baseline = state.bn_param_tensors();
        let prepared = prepare_advprop(&state);
        assert_eq!(prepared.bn_param_tensors(), 2 * baseline);
        assert_eq!(prepared.running.len(), 2 * state.running.len());
    }

    #[test]
    fn zero_epsilon_adversarial_training_matches_plain_training() {
        let synth = generate_synthetic(6, 20, 2, &[0, 10], 13).unwrap();
        let dataset = prepare(&synth.dataset);
        let spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let mut state = build(&spec).unwrap();
        glorot_uniform_init(&mut state, 2);
        let config = TrainConfig {
            epochs: 20,
            batch_size: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let (_, plain) = train(&state, &dataset, &config).unwrap();
        let zero = AttackConfig {
            method: AttackMethod::Fgsm,
            epsilon: 0.0,
            iterations: 1,
            alpha: Some(0.0),
        };
        let (_, doubled) = adversarial_train(&state, &dataset, &config, &zero, false).unwrap();
        assert_eq!(plain.epochs.len(), doubled.epochs.len());
        for (a, b) in plain.epochs.iter().zip(&doubled.epochs) {
            assert!(
                (a.train_loss - b.train_loss).abs() < 1e-9,
                "{} vs {}",
                a.train_loss,
                b.train_loss
            );
        }
    }
}
