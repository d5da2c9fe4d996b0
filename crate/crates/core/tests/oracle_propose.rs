//! Grid brute-force oracle for the cost-aware proposal on a 1-D bi-fidelity
//! toy problem.

use mfbo_core::acquisition::{
    af_hf, af_lf, propose, AcquisitionKind, BestObserved, Domain, SearchConfig,
};
use mfbo_core::emulator::{
    fit, AugmentedInput, EmulatorConfig, InputSpace, MixedInput, TrainingData,
};

fn toy_bi_fidelity_model() -> (mfbo_core::emulator::TrainedEmulator, BestObserved) {
    // Canonical maximization toy: HF peaks at x = 0.55, the LF companion is
    // shifted and biased.
    let space = InputSpace::new(1, vec![], 2).unwrap();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let hf = |x: f64| -(x - 0.55) * (x - 0.55);
    let lf = |x: f64| -(x - 0.62) * (x - 0.62) - 0.08;
    for i in 0..5 {
        let x = 0.05 + 0.9 * i as f64 / 4.0;
        inputs.push(AugmentedInput {
            point: MixedInput::continuous(vec![x]),
            source: 0,
        });
        outputs.push(hf(x));
    }
    for i in 0..9 {
        let x = 0.03 + 0.94 * i as f64 / 8.0;
        inputs.push(AugmentedInput {
            point: MixedInput::continuous(vec![x]),
            source: 1,
        });
        outputs.push(lf(x));
    }
    let data = TrainingData::new(space, inputs.clone(), outputs.clone()).unwrap();
    let config = EmulatorConfig {
        restarts: 6,
        seed: 21,
        max_opt_iters: 40,
        ..EmulatorConfig::default()
    };
    let model = fit(&data, &config).unwrap();
    let mut best = BestObserved::new(2, 0);
    for (u, y) in inputs.iter().zip(&outputs) {
        best.update(u.source, *y);
    }
    (model, best)
}

#[test]
fn propose_matches_a_thousand_point_grid_brute_force() {
    let (model, best) = toy_bi_fidelity_model();
    let costs = [10.0, 1.0];
    let domain = Domain::continuous(&[(0.0, 1.0)]);
    let cfg = SearchConfig {
        seed: 77,
        ..SearchConfig::default()
    };

    // Dense grid evaluation of the composite acquisition, skipping grid
    // points that coincide with an existing sample of the same source
    // (duplicate suppression applies there).
    let train: Vec<(usize, f64)> = model
        .train_inputs()
        .iter()
        .map(|u| (u.source, u.point.continuous[0]))
        .collect();
    let mut grid_best_value = f64::NEG_INFINITY;
    let mut grid_best = (0usize, 0.0f64);
    for source in 0..2 {
        let y_star = best.best(source).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            if train
                .iter()
                .any(|&(s, t)| s == source && (t - x).abs() <= 1e-9)
            {
                continue;
            }
            let point = MixedInput::continuous(vec![x]);
            let raw = if source == 0 {
                af_hf(&model, &point, 0, y_star).unwrap()
            } else {
                af_lf(&model, &point, 1, y_star).unwrap()
            };
            let scaled = raw / costs[source];
            if scaled > grid_best_value {
                grid_best_value = scaled;
                grid_best = (source, x);
            }
        }
    }

    let proposal = propose(
        &model,
        &best,
        &costs,
        &domain,
        AcquisitionKind::CostAware,
        &cfg,
    )
    .unwrap();

    assert_eq!(
        proposal.source, grid_best.0,
        "winning source: propose {} vs grid {}",
        proposal.source, grid_best.0
    );
    // The polished continuous optimum may legitimately beat the grid; it
    // must never fall below it (up to FD polish tolerance), and it must lie
    // within grid resolution of the brute-force argmax.
    assert!(
        proposal.scaled_value >= grid_best_value - 1e-6,
        "scaled value {} vs grid {}",
        proposal.scaled_value,
        grid_best_value
    );
    assert!(
        (proposal.point.continuous[0] - grid_best.1).abs() <= 2e-3
            || proposal.scaled_value >= grid_best_value,
        "argmax location: propose {} vs grid {}",
        proposal.point.continuous[0],
        grid_best.1
    );
}

#[test]
fn exploration_af_is_zero_variance_safe_everywhere_on_the_grid() {
    let (model, best) = toy_bi_fidelity_model();
    for i in 0..=200 {
        let x = i as f64 / 200.0;
        let v = af_lf(
            &model,
            &MixedInput::continuous(vec![x]),
            1,
            best.best(1).unwrap(),
        )
        .unwrap();
        assert!(v >= 0.0 && v.is_finite());
    }
}
