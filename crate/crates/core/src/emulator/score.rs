//! Negatively oriented interval score, the proper scoring rule used to
//! penalize the training objective.

use crate::error::EmulatorError;
use crate::mathkit::std_normal_quantile;

/// A posterior predictive summary in output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Predictive variance, non-negative.
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Half-width multiplier of the central (1-v) interval. The conventional
/// 1.96 is used at v = 0.05; other coverage levels use the exact normal
/// quantile.
pub(crate) fn half_width_multiplier(v: f64) -> f64 {
    if v == 0.05 {
        1.96
    } else {
        std_normal_quantile(1.0 - v / 2.0)
    }
}

/// Mean negatively oriented interval score at coverage parameter `v`.
///
/// Per observation: (U - L) + (2/v)(L - y) if y < L, plus (2/v)(y - U) if
/// y > U, where [L, U] is the central (1-v) prediction interval. Lower is
/// better; the score is strictly proper.
pub fn interval_score(
    predictions: &[Prediction],
    observations: &[f64],
    v: f64,
) -> Result<f64, EmulatorError> {
    if predictions.len() != observations.len() {
        return Err(EmulatorError::LengthMismatch {
            inputs: predictions.len(),
            outputs: observations.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EmulatorError::EmptyTrainingData);
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(EmulatorError::InvalidConfig(format!(
            "coverage parameter v must lie in (0,1), got {v}"
        )));
    }
    let z = half_width_multiplier(v);
    let penalty = 2.0 / v;
    let total: f64 = predictions
        .iter()
        .zip(observations)
        .map(|(p, &y)| {
            let half = z * p.std_dev();
            let lower = p.mean - half;
            let upper = p.mean + half;
            let mut score = upper - lower;
            if y < lower {
                score += penalty * (lower - y);
            } else if y > upper {
                score += penalty * (y - upper);
            }
            score
        })
        .sum();
    Ok(total / predictions.len() as f64)
}
