//! Multi-fidelity Bayesian optimization with latent-map Gaussian process
//! emulation.
//!
//! The library fuses an arbitrary number of noisy, biased data sources into a
//! single emulator: categorical inputs (including the data-source indicator)
//! are mapped into a learned low-dimensional latent manifold inside a
//! Gaussian kernel, each source carries its own nugget (noise) parameter, and
//! hyperparameters are estimated by MAP penalized with the negatively
//! oriented interval score. A cost-aware acquisition loop then drives
//! sampling toward the high-fidelity optimum at minimal cost.
//!
//! Modules:
//! - [`mathkit`]: Sobol sequences, kernel distances, PSD solves, normal CDF.
//! - [`emulator`]: the latent-map GP, its training objective and predictions.
//! - [`acquisition`]: per-source acquisition functions and the cost-scaled
//!   proposal optimization.
//! - [`campaign`]: the optimization loop, budgets, stop rules and history.
//! - [`benchmarks`]: analytic multi-fidelity families and RRMSE measurement.

// Negated comparisons like `!(x > 0.0)` are deliberate NaN-rejecting
// guards throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mathkit;
pub mod optimize;

pub mod acquisition;
pub mod benchmarks;
pub mod campaign;
pub mod emulator;
