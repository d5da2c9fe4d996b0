//! The trained emulator: cached factorization plus posterior prediction.

use std::sync::atomic::{AtomicU64, Ordering};

use super::fit::{EmulatorConfig, Scaling};
use super::score::{interval_score, Prediction};
use super::{
    assemble_from_prepared, kernel_cross, prepare_inputs, AugmentedInput, Hyperparameters,
    InputSpace, MixedInput, Prepared, TrainingData, LATENT_DIM,
};
use crate::error::EmulatorError;
use crate::mathkit::{psd_factorize, PsdFactor};

/// A fitted latent-map GP, immutable and safe for concurrent prediction.
///
/// Holds the MAP hyperparameters, the training data, and the factorized
/// nugget-augmented correlation matrix along with the solved vectors needed
/// by the posterior formulas. All cached quantities live in standardized
/// space; predictions are converted back to problem units at the API
/// boundary.
pub struct TrainedEmulator {
    hyper: Hyperparameters,
    space: InputSpace,
    scaling: Scaling,
    raw_data: TrainingData,
    std_data: TrainingData,
    prepared: Prepared,
    factor: PsdFactor,
    /// Rd^{-1} (y - beta 1) over standardized outputs.
    alpha: Vec<f64>,
    /// Rd^{-1} 1.
    w: Vec<f64>,
    sum_w: f64,
    literal_noise_term: bool,
    coverage_v: f64,
    objective_value: f64,
    warnings: Vec<String>,
    clamp_events: AtomicU64,
}

impl TrainedEmulator {
    pub(crate) fn build(
        raw_data: TrainingData,
        std_data: TrainingData,
        hyper: Hyperparameters,
        scaling: Scaling,
        config: &EmulatorConfig,
        warnings: Vec<String>,
        objective_value: f64,
    ) -> Result<Self, EmulatorError> {
        let prepared = prepare_inputs(std_data.inputs(), &hyper, std_data.space())?;
        let r_delta = assemble_from_prepared(&prepared, std_data.inputs(), &hyper.delta);
        let factor = psd_factorize(&r_delta)?;
        let resid: Vec<f64> = std_data.outputs().iter().map(|y| y - hyper.beta).collect();
        let alpha = factor.solve(&resid);
        let ones = vec![1.0; std_data.len()];
        let w = factor.solve(&ones);
        let sum_w = w.iter().sum();
        Ok(TrainedEmulator {
            space: std_data.space().clone(),
            hyper,
            scaling,
            raw_data,
            std_data,
            prepared,
            factor,
            alpha,
            w,
            sum_w,
            literal_noise_term: config.literal_noise_term,
            coverage_v: config.coverage_v,
            objective_value,
            warnings,
            clamp_events: AtomicU64::new(0),
        })
    }

    /// Posterior mean and variance for `point` queried from source `source`,
    /// in problem units. The variance includes the additive per-source noise
    /// term.
    pub fn predict(&self, point: &MixedInput, source: usize) -> Result<Prediction, EmulatorError> {
        if source >= self.space.num_sources {
            return Err(EmulatorError::SourceOutOfRange {
                index: source,
                num_sources: self.space.num_sources,
            });
        }
        let query = AugmentedInput {
            point: self.scaling.scale_point(point),
            source,
        };
        let query_prepared =
            prepare_inputs(std::slice::from_ref(&query), &self.hyper, &self.space)?;

        let n = self.std_data.len();
        let mut r = vec![0.0; n];
        for (j, slot) in r.iter_mut().enumerate() {
            *slot = kernel_cross(&query_prepared, 0, &self.prepared, j);
        }

        let mean_std = self.hyper.beta + dot(&r, &self.alpha);
        let t = self.factor.solve_lower(&r);
        let q: f64 = t.iter().map(|v| v * v).sum();
        let g = 1.0 - dot(&self.w, &r);
        let mut noise_free = self.hyper.sigma2 * (1.0 - q + g * g / self.sum_w);
        if noise_free < 0.0 {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
            noise_free = 0.0;
        }
        let noise = if self.literal_noise_term {
            self.hyper.delta[source]
        } else {
            self.hyper.sigma2 * self.hyper.delta[source]
        };
        Ok(Prediction {
            mean: self.scaling.destandardize_mean(mean_std),
            variance: self.scaling.destandardize_variance(noise_free + noise),
        })
    }

    /// MAP hyperparameters (standardized space).
    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Training inputs in problem units.
    pub fn train_inputs(&self) -> &[AugmentedInput] {
        self.raw_data.inputs()
    }

    /// Training outputs in problem units.
    pub fn train_outputs(&self) -> &[f64] {
        self.raw_data.outputs()
    }

    pub fn training_size(&self) -> usize {
        self.std_data.len()
    }

    /// Final value of the penalized training objective.
    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Number of predictions whose noise-free variance was clamped at zero.
    pub fn variance_clamp_events(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// Estimated noise variance of a source in problem units:
    /// sigma^2 * delta_j (or the bare nugget under the literal flag),
    /// rescaled by the squared output standardization factor.
    pub fn estimated_noise_variance(&self, source: usize) -> Result<f64, EmulatorError> {
        if source >= self.space.num_sources {
            return Err(EmulatorError::SourceOutOfRange {
                index: source,
                num_sources: self.space.num_sources,
            });
        }
        let std_units = if self.literal_noise_term {
            self.hyper.delta[source]
        } else {
            self.hyper.sigma2 * self.hyper.delta[source]
        };
        Ok(self.scaling.destandardize_variance(std_units))
    }

    /// Position of a source on the learned fidelity manifold.
    pub fn latent_source_position(&self, source: usize) -> Result<[f64; LATENT_DIM], EmulatorError> {
        if source >= self.space.num_sources {
            return Err(EmulatorError::SourceOutOfRange {
                index: source,
                num_sources: self.space.num_sources,
            });
        }
        let row = self.hyper.a_fidelity.row(source);
        Ok([row[0], row[1]])
    }

    /// In-sample predictions at the training points (standardized units),
    /// including the per-source noise term.
    pub(crate) fn in_sample_predictions(&self) -> Vec<Prediction> {
        let n = self.std_data.len();
        let diag_inv = self.factor.diag_inverse();
        let jitter = self.factor.jitter();
        let y = self.std_data.outputs();
        (0..n)
            .map(|i| {
                let source = self.std_data.inputs()[i].source;
                let d_eff = self.hyper.delta[source] + jitter;
                let mean = y[i] - d_eff * self.alpha[i];
                let q = 1.0 - d_eff + d_eff * d_eff * diag_inv[i];
                let g = d_eff * self.w[i];
                let mut noise_free = self.hyper.sigma2 * (1.0 - q + g * g / self.sum_w);
                if noise_free < 0.0 {
                    self.clamp_events.fetch_add(1, Ordering::Relaxed);
                    noise_free = 0.0;
                }
                let noise = if self.literal_noise_term {
                    self.hyper.delta[source]
                } else {
                    self.hyper.sigma2 * self.hyper.delta[source]
                };
                Prediction {
                    mean,
                    variance: noise_free + noise,
                }
            })
            .collect()
    }

    /// Mean interval score of the in-sample predictions at the trained
    /// coverage parameter (standardized units).
    pub fn in_sample_interval_score(&self) -> Result<f64, EmulatorError> {
        interval_score(
            &self.in_sample_predictions(),
            self.std_data.outputs(),
            self.coverage_v,
        )
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
