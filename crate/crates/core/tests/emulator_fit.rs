//! Fit-quality studies on constructed multi-fidelity datasets.

use mfbo_core::emulator::{
    fit, AugmentedInput, EmulatorConfig, InputSpace, MixedInput, TrainingData,
};
use mfbo_core::mathkit::{sobol_points, Rng64};

fn latent_distance(model: &mfbo_core::emulator::TrainedEmulator, a: usize, b: usize) -> f64 {
    let za = model.latent_source_position(a).unwrap();
    let zb = model.latent_source_position(b).unwrap();
    ((za[0] - zb[0]).powi(2) + (za[1] - zb[1]).powi(2)).sqrt()
}

/// Smooth 1-D test function with output spread of a few units.
fn wave(x: f64) -> f64 {
    3.0 * (2.0 * std::f64::consts::PI * x).sin() + 2.0 * x
}

/// Fit a bi-fidelity dataset where source 1 evaluates `second` at its own
/// Sobol locations and return the latent distance between the two sources.
fn fitted_pair_distance(second: impl Fn(f64) -> f64, seed: u64) -> f64 {
    let space = InputSpace::new(1, vec![], 2).unwrap();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (source, skip) in [(0usize, 11u64), (1, 97)] {
        for p in sobol_points(1, 20, skip).unwrap() {
            let x = p[0];
            inputs.push(AugmentedInput {
                point: MixedInput::continuous(vec![x]),
                source,
            });
            outputs.push(if source == 0 { wave(x) } else { second(x) });
        }
    }
    let data = TrainingData::new(space, inputs, outputs).unwrap();
    let config = EmulatorConfig {
        restarts: 16,
        seed,
        max_opt_iters: 80,
        ..EmulatorConfig::default()
    };
    let model = fit(&data, &config).unwrap();
    latent_distance(&model, 0, 1)
}

#[test]
fn duplicated_sources_land_next_to_each_other_on_the_fidelity_manifold() {
    // A source that duplicates the first one must collapse onto it in the
    // fidelity manifold; an anticorrelated source must stay far away (the
    // kernel cannot express negative correlation, so merging would wreck
    // the likelihood).
    let twin = fitted_pair_distance(wave, 5);
    let stranger = fitted_pair_distance(|x| -wave(x), 5);
    assert!(
        twin < 0.1,
        "duplicated sources are {twin} apart on the fidelity manifold"
    );
    assert!(
        stranger > 1.0,
        "anticorrelated source sits only {stranger} away"
    );
}

#[test]
fn per_source_noise_is_recovered_on_bi_fidelity_data() {
    // HF: wave + N(0, 4); LF: the same wave, noiseless; n = 100 each.
    // The fitted per-source noise variances must bracket the truth.
    let space = InputSpace::new(1, vec![], 2).unwrap();
    let mut rng = Rng64::new(2026);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for p in sobol_points(1, 100, 7).unwrap() {
        inputs.push(AugmentedInput {
            point: MixedInput::continuous(vec![p[0]]),
            source: 0,
        });
        outputs.push(wave(p[0]) + 2.0 * rng.normal());
    }
    for p in sobol_points(1, 100, 211).unwrap() {
        inputs.push(AugmentedInput {
            point: MixedInput::continuous(vec![p[0]]),
            source: 1,
        });
        outputs.push(wave(p[0]));
    }
    let data = TrainingData::new(space, inputs, outputs).unwrap();
    let config = EmulatorConfig {
        restarts: 8,
        seed: 31,
        max_opt_iters: 60,
        ..EmulatorConfig::default()
    };
    let model = fit(&data, &config).unwrap();
    let hf_noise = model.estimated_noise_variance(0).unwrap();
    let lf_noise = model.estimated_noise_variance(1).unwrap();
    assert!(
        hf_noise > 2.0 && hf_noise < 8.0,
        "HF noise variance {hf_noise} outside [2, 8]"
    );
    assert!(lf_noise < 0.4, "LF noise variance {lf_noise} not near zero");
}

#[test]
fn shuffling_training_rows_leaves_predictions_stable() {
    let space = InputSpace::new(1, vec![], 2).unwrap();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (source, skip) in [(0usize, 5u64), (1, 31)] {
        for p in sobol_points(1, 12, skip).unwrap() {
            inputs.push(AugmentedInput {
                point: MixedInput::continuous(vec![p[0]]),
                source,
            });
            outputs.push(wave(p[0]) + 0.2 * source as f64);
        }
    }
    let config = EmulatorConfig {
        restarts: 6,
        seed: 13,
        max_opt_iters: 40,
        ..EmulatorConfig::default()
    };
    let data = TrainingData::new(space.clone(), inputs.clone(), outputs.clone()).unwrap();
    let model_a = fit(&data, &config).unwrap();

    // Deterministic shuffle.
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = Rng64::new(99);
    for i in (1..order.len()).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let shuffled_inputs: Vec<AugmentedInput> = order.iter().map(|&i| inputs[i].clone()).collect();
    let shuffled_outputs: Vec<f64> = order.iter().map(|&i| outputs[i]).collect();
    let shuffled = TrainingData::new(space, shuffled_inputs, shuffled_outputs).unwrap();
    let model_b = fit(&shuffled, &config).unwrap();

    // Row order permutes the covariance assembly, so factorization
    // round-off nudges the optimizer trajectory; predictions must agree
    // within restart-level noise.
    let tol = 0.02 * model_a.scaling().y_sd;
    for i in 0..=20 {
        let q = MixedInput::continuous(vec![i as f64 / 20.0]);
        for source in 0..2 {
            let pa = model_a.predict(&q, source).unwrap();
            let pb = model_b.predict(&q, source).unwrap();
            assert!(
                (pa.mean - pb.mean).abs() < tol,
                "mean differs under row shuffle: {} vs {}",
                pa.mean,
                pb.mean
            );
            assert!((pa.variance - pb.variance).abs() < tol * tol.max(1.0));
        }
    }

    // Re-fitting the same (unshuffled) data is bit-stable.
    let model_c = fit(&data, &config).unwrap();
    for i in 0..=20 {
        let q = MixedInput::continuous(vec![i as f64 / 20.0]);
        for source in 0..2 {
            let pa = model_a.predict(&q, source).unwrap();
            let pc = model_c.predict(&q, source).unwrap();
            assert_eq!(pa.mean, pc.mean);
            assert_eq!(pa.variance, pc.variance);
        }
    }
}
