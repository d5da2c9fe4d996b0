//! MAP training: standardization, prior draws, multi-start quasi-Newton
//! optimization of the penalized objective, and assembly of the trained
//! emulator caches.

use rayon::prelude::*;

use super::objective::{DeltaMode, DeltaPriorCount, MapObjective, ParamLayout, PenaltyData};
use super::predict::TrainedEmulator;
use super::{AugmentedInput, Hyperparameters, MixedInput, TrainingData};
use crate::error::EmulatorError;
use crate::mathkit::Rng64;
use crate::optimize::{minimize, OptimizeConfig};

/// Training options. Continuous inputs are min-max scaled to [0,1] per
/// dimension and outputs are standardized to zero mean / unit variance
/// (pooled across sources) before the objective sees them, so the priors on
/// omega and the nuggets are meaningful.
#[derive(Debug, Clone)]
pub struct EmulatorConfig {
    /// Weight of the interval-score penalty.
    pub epsilon: f64,
    /// Coverage parameter of the interval score.
    pub coverage_v: f64,
    /// Number of prior-drawn restarts of the local optimizer.
    pub restarts: usize,
    /// Seed for restart draws.
    pub seed: u64,
    /// Nugget estimation mode.
    pub delta_mode: DeltaMode,
    /// Add the predictive noise term as a bare nugget instead of
    /// sigma^2-scaled (source-formula compatibility).
    pub literal_noise_term: bool,
    /// Keep the printed "+ log p" sign inside the argmin (source-formula
    /// compatibility).
    pub literal_prior_sign: bool,
    /// Which predictions feed the interval-score penalty.
    pub penalty_data: PenaltyData,
    /// Iteration cap per optimizer start.
    pub max_opt_iters: usize,
    /// Run restarts and finite-difference probes in parallel.
    pub parallel: bool,
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        EmulatorConfig {
            epsilon: 0.08,
            coverage_v: 0.05,
            restarts: 16,
            seed: 0,
            delta_mode: DeltaMode::PerSource,
            literal_noise_term: false,
            literal_prior_sign: false,
            penalty_data: PenaltyData::default(),
            max_opt_iters: 60,
            parallel: true,
        }
    }
}

/// Extra per-call options for refits inside an optimization loop.
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Previous optimum, started as one extra restart.
    pub warm_start: Option<Hyperparameters>,
    /// Iteration cap for the warm restart (defaults to `max_opt_iters`).
    pub warm_iters: Option<usize>,
}

/// Input/output standardization captured from a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub x_min: Vec<f64>,
    pub x_range: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

impl Scaling {
    pub(crate) fn from_data(data: &TrainingData) -> Scaling {
        let dx = data.space().continuous_dims;
        let mut x_min = vec![f64::INFINITY; dx];
        let mut x_max = vec![f64::NEG_INFINITY; dx];
        for input in data.inputs() {
            for (d, &x) in input.point.continuous.iter().enumerate() {
                x_min[d] = x_min[d].min(x);
                x_max[d] = x_max[d].max(x);
            }
        }
        let x_range: Vec<f64> = x_min
            .iter()
            .zip(&x_max)
            .map(|(lo, hi)| {
                let r = hi - lo;
                if r.is_finite() && r > 0.0 {
                    r
                } else {
                    1.0
                }
            })
            .collect();
        for lo in x_min.iter_mut() {
            if !lo.is_finite() {
                *lo = 0.0;
            }
        }
        let n = data.len() as f64;
        let y_mean = data.outputs().iter().sum::<f64>() / n;
        let var = data
            .outputs()
            .iter()
            .map(|y| (y - y_mean) * (y - y_mean))
            .sum::<f64>()
            / n;
        let y_sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        Scaling {
            x_min,
            x_range,
            y_mean,
            y_sd,
        }
    }

    pub fn scale_point(&self, point: &MixedInput) -> MixedInput {
        MixedInput {
            continuous: point
                .continuous
                .iter()
                .zip(self.x_min.iter().zip(&self.x_range))
                .map(|(&x, (&lo, &range))| (x - lo) / range)
                .collect(),
            categorical: point.categorical.clone(),
        }
    }

    pub fn standardize_output(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_sd
    }

    pub fn destandardize_mean(&self, mean: f64) -> f64 {
        mean * self.y_sd + self.y_mean
    }

    pub fn destandardize_variance(&self, variance: f64) -> f64 {
        variance * self.y_sd * self.y_sd
    }
}

/// Train an emulator with default fit options.
pub fn fit(data: &TrainingData, config: &EmulatorConfig) -> Result<TrainedEmulator, EmulatorError> {
    fit_with_options(data, config, &FitOptions::default())
}

/// Train an emulator, optionally warm-starting one restart from a previous
/// optimum.
pub fn fit_with_options(
    data: &TrainingData,
    config: &EmulatorConfig,
    options: &FitOptions,
) -> Result<TrainedEmulator, EmulatorError> {
    if data.is_empty() {
        return Err(EmulatorError::EmptyTrainingData);
    }
    if !(config.coverage_v > 0.0 && config.coverage_v < 1.0) {
        return Err(EmulatorError::InvalidConfig(format!(
            "coverage_v must be in (0,1), got {}",
            config.coverage_v
        )));
    }
    if config.epsilon < 0.0 {
        return Err(EmulatorError::InvalidConfig(format!(
            "epsilon must be non-negative, got {}",
            config.epsilon
        )));
    }
    if let DeltaMode::Fixed(values) = &config.delta_mode {
        if values.len() != data.space().num_sources {
            return Err(EmulatorError::InvalidConfig(format!(
                "fixed nugget vector has {} entries for {} sources",
                values.len(),
                data.space().num_sources
            )));
        }
    }

    let mut warnings = Vec::new();
    let dx = data.space().continuous_dims;
    if data.len() < dx + 2 {
        warnings.push(format!(
            "training set has {} samples; at least {} recommended for {} continuous dims",
            data.len(),
            dx + 2,
            dx
        ));
    }
    for (j, count) in data.source_counts().iter().enumerate() {
        if *count == 0 {
            warnings.push(format!("source {j} has no samples"));
        } else if *count < 2 {
            warnings.push(format!("source {j} has fewer than 2 samples"));
        }
    }

    // Standardize into the internal training set.
    let scaling = Scaling::from_data(data);
    let std_inputs: Vec<AugmentedInput> = data
        .inputs()
        .iter()
        .map(|u| AugmentedInput {
            point: scaling.scale_point(&u.point),
            source: u.source,
        })
        .collect();
    let std_outputs: Vec<f64> = data
        .outputs()
        .iter()
        .map(|&y| scaling.standardize_output(y))
        .collect();
    let std_data = TrainingData::new(data.space().clone(), std_inputs, std_outputs)?;

    let layout = ParamLayout::new(data.space(), config.delta_mode.clone());
    let objective = MapObjective {
        data: &std_data,
        epsilon: config.epsilon,
        coverage_v: config.coverage_v,
        literal_prior_sign: config.literal_prior_sign,
        literal_noise_term: config.literal_noise_term,
        delta_prior: DeltaPriorCount::for_mode(&config.delta_mode),
        penalty_data: config.penalty_data,
    };
    let eval = |theta: &[f64]| -> f64 {
        let hyper = layout.unpack(theta);
        match objective.evaluate(&hyper) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };

    // Restart starting points drawn from the priors, plus the warm start.
    let mut starts: Vec<(Vec<f64>, usize)> = (0..config.restarts)
        .map(|r| (draw_start(&layout, config.seed, r as u64), config.max_opt_iters))
        .collect();
    if let Some(warm) = &options.warm_start {
        starts.push((
            layout.pack(warm),
            options.warm_iters.unwrap_or(config.max_opt_iters),
        ));
    }
    if starts.is_empty() {
        return Err(EmulatorError::InvalidConfig(
            "training needs at least one restart or a warm start".into(),
        ));
    }

    let run_one = |(start, iters): &(Vec<f64>, usize)| {
        let opt_cfg = OptimizeConfig {
            max_iters: *iters,
            parallel_gradient: config.parallel,
            ..OptimizeConfig::default()
        };
        minimize(&eval, start, &opt_cfg)
    };
    let results: Vec<_> = if config.parallel {
        starts.par_iter().map(run_one).collect()
    } else {
        starts.iter().map(run_one).collect()
    };

    let best = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.value.is_finite())
        .min_by(|(ia, a), (ib, b)| {
            a.value
                .partial_cmp(&b.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        });
    let Some((_, best)) = best else {
        return Err(EmulatorError::TrainingFailed {
            restarts: starts.len(),
            detail: "every restart produced a non-finite objective (covariance factorization \
                     failed or parameters diverged)"
                .into(),
        });
    };

    let hyper = layout.unpack(&best.x);
    TrainedEmulator::build(
        data.clone(),
        std_data,
        hyper,
        scaling,
        config,
        warnings,
        best.value,
    )
}

/// Draw one optimizer start from the hyperparameter priors.
fn draw_start(layout: &ParamLayout, seed: u64, restart: u64) -> Vec<f64> {
    let mut rng = Rng64::from_key(&[seed, 0xF17, restart]);
    let mut theta = Vec::with_capacity(layout.len());
    let probe = layout.unpack(&vec![0.0; layout.len()]);
    for _ in 0..probe.omega.len() {
        theta.push(-3.0 + 3.0f64.sqrt() * rng.normal());
    }
    let map_entries = probe.a_fidelity.entries().len()
        + probe.a_design.as_ref().map_or(0, |m| m.entries().len());
    for _ in 0..map_entries {
        theta.push(3.0f64.sqrt() * rng.normal());
    }
    theta.push(rng.normal()); // beta ~ N(0,1)
    theta.push(2.0 * 3.0f64.sqrt() * rng.normal()); // log sigma2 = 2 log sigma
    let delta_params = layout.len() - theta.len();
    for _ in 0..delta_params {
        theta.push(rng.half_cauchy(0.01).max(1e-10).ln());
    }
    theta
}
