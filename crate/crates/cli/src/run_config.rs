//! Declarative run configuration: a JSON file merged with command-line
//! overrides (flags win).

use serde::{Deserialize, Serialize};

use mfbo_core::acquisition::{AcquisitionKind, SearchConfig};
use mfbo_core::campaign::{LoopConfig, RefitPolicy};
use mfbo_core::emulator::{DeltaMode, EmulatorConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Benchmark family name.
    pub problem: String,
    /// Total sampling budget (initial data included); family default when
    /// absent.
    pub budget: Option<f64>,
    /// Initial samples per source; family default when absent.
    pub n_init: Option<Vec<usize>>,
    pub stall_window: usize,
    pub max_iterations: usize,
    pub repetitions: usize,
    /// Base seed; repetition r runs with seed base + r.
    pub seed: u64,
    pub epsilon: f64,
    pub coverage_v: f64,
    pub restarts: usize,
    pub fit_max_iters: usize,
    /// Force a single nugget shared by every source.
    pub shared_nugget: bool,
    pub literal_noise_term: bool,
    pub literal_prior_sign: bool,
    /// Run the HF-only expected-improvement baseline through the same
    /// harness.
    pub single_fidelity: bool,
    /// Worker cap for parallel repetitions; 0 uses all cores.
    pub workers: usize,
    pub refit_fresh_restarts: usize,
    pub refit_fresh_period: usize,
    pub refit_warm_iters: usize,
    pub refit_fresh_iters: usize,
    pub search_starts: usize,
    pub search_polish_top: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: String::new(),
            budget: None,
            n_init: None,
            stall_window: 50,
            max_iterations: 1000,
            repetitions: 20,
            seed: 0,
            epsilon: 0.08,
            coverage_v: 0.05,
            restarts: 16,
            fit_max_iters: 60,
            shared_nugget: false,
            literal_noise_term: false,
            literal_prior_sign: false,
            single_fidelity: false,
            workers: 0,
            refit_fresh_restarts: 1,
            refit_fresh_period: 1,
            refit_warm_iters: 15,
            refit_fresh_iters: 25,
            search_starts: 64,
            search_polish_top: 8,
        }
    }
}

impl RunConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting guards
    pub fn validate(&self) -> Result<(), String> {
        if let Some(budget) = self.budget {
            if !(budget > 0.0) {
                return Err(format!("budget must be positive, got {budget}"));
            }
        }
        if self.repetitions < 1 {
            return Err("repetitions must be at least 1".into());
        }
        if self.epsilon < 0.0 {
            return Err(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.coverage_v > 0.0 && self.coverage_v < 1.0) {
            return Err(format!(
                "coverage_v must lie in (0,1), got {}",
                self.coverage_v
            ));
        }
        Ok(())
    }

    pub fn emulator_config(&self, seed: u64) -> EmulatorConfig {
        EmulatorConfig {
            epsilon: self.epsilon,
            coverage_v: self.coverage_v,
            restarts: self.restarts,
            seed,
            delta_mode: if self.shared_nugget {
                DeltaMode::Shared
            } else {
                DeltaMode::PerSource
            },
            literal_noise_term: self.literal_noise_term,
            literal_prior_sign: self.literal_prior_sign,
            penalty_data: Default::default(),
            max_opt_iters: self.fit_max_iters,
            parallel: true,
        }
    }

    /// Assemble the loop configuration for one repetition.
    pub fn loop_config(&self, budget: f64, n_init: Vec<usize>, seed: u64) -> LoopConfig {
        LoopConfig {
            budget,
            stall_window: self.stall_window,
            max_iterations: self.max_iterations,
            seed,
            n_init,
            emulator: self.emulator_config(seed),
            search: SearchConfig {
                starts: self.search_starts,
                polish_top: self.search_polish_top,
                ..SearchConfig::default()
            },
            refit: RefitPolicy {
                fresh_restarts: self.refit_fresh_restarts,
                fresh_period: self.refit_fresh_period,
                warm_iters: self.refit_warm_iters,
                fresh_iters: self.refit_fresh_iters,
            },
            acquisition: if self.single_fidelity {
                AcquisitionKind::SingleFidelityEi
            } else {
                AcquisitionKind::CostAware
            },
        }
    }
}
