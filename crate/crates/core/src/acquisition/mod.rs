//! Per-source acquisition functions and the cost-aware proposal step.
//!
//! Low-fidelity sources are scored with the exploration part of expected
//! improvement; the high-fidelity source is scored with plain improvement.
//! Every source's inner maximization runs over the design domain, the
//! winning values are divided by the per-source sampling costs, and the
//! best (point, source) pair is proposed.
//!
//! Everything here works in the canonical maximization sense: minimization
//! problems are negated at ingestion by the campaign loop.

use rayon::prelude::*;

use crate::emulator::{MixedInput, TrainedEmulator};
use crate::error::{AcquisitionError, EmulatorError};
use crate::mathkit::{sobol_points, std_normal_cdf, std_normal_pdf, Rng64};
use crate::optimize::{minimize, OptimizeConfig};

/// Continuous bounds and categorical cardinalities of the design domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cardinalities: Vec<usize>,
}

impl Domain {
    pub fn continuous(bounds: &[(f64, f64)]) -> Self {
        Domain {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            cardinalities: Vec::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    /// Map a unit-cube point into problem units.
    pub fn lerp(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
            .collect()
    }

    /// Map a problem-units point into the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

/// Best observed output per source, in the canonical maximization sense.
#[derive(Debug, Clone)]
pub struct BestObserved {
    per_source_best: Vec<Option<f64>>,
    hf_index: usize,
}

impl BestObserved {
    pub fn new(num_sources: usize, hf_index: usize) -> Self {
        BestObserved {
            per_source_best: vec![None; num_sources],
            hf_index,
        }
    }

    /// Fold in one canonical observation; the incumbent never worsens.
    pub fn update(&mut self, source: usize, y: f64) {
        let slot = &mut self.per_source_best[source];
        match slot {
            Some(best) if *best >= y => {}
            _ => *slot = Some(y),
        }
    }

    pub fn best(&self, source: usize) -> Option<f64> {
        self.per_source_best[source]
    }

    pub fn hf_index(&self) -> usize {
        self.hf_index
    }

    pub fn hf_best(&self) -> Option<f64> {
        self.per_source_best[self.hf_index]
    }

    /// Global best across sources.
    pub fn global_best(&self) -> Option<f64> {
        self.per_source_best
            .iter()
            .flatten()
            .copied()
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }

    /// The incumbent used by the acquisition of `source`; sources that have
    /// never been sampled fall back to the global best.
    pub fn effective_best(&self, source: usize) -> Option<f64> {
        self.per_source_best[source].or_else(|| self.global_best())
    }
}

/// Exploration acquisition for a low-fidelity source:
/// sigma_j(u) * phi((y*_j - mu_j(u)) / sigma_j(u)), defined as 0 when the
/// predictive spread vanishes.
pub fn af_lf(
    model: &TrainedEmulator,
    point: &MixedInput,
    source: usize,
    y_star: f64,
) -> Result<f64, EmulatorError> {
    let p = model.predict(point, source)?;
    let sd = p.std_dev();
    if sd <= 0.0 {
        return Ok(0.0);
    }
    Ok(sd * std_normal_pdf((y_star - p.mean) / sd))
}

/// Improvement acquisition for the high-fidelity source: mu_l(u) - y*_l in
/// the canonical maximization sense. Depends on the posterior mean only.
pub fn af_hf(
    model: &TrainedEmulator,
    point: &MixedInput,
    hf_index: usize,
    y_star: f64,
) -> Result<f64, EmulatorError> {
    let p = model.predict(point, hf_index)?;
    Ok(p.mean - y_star)
}

/// Expected improvement (canonical maximization), used by the
/// single-fidelity baseline.
pub fn expected_improvement(
    model: &TrainedEmulator,
    point: &MixedInput,
    source: usize,
    y_star: f64,
) -> Result<f64, EmulatorError> {
    let p = model.predict(point, source)?;
    let sd = p.std_dev();
    let gain = p.mean - y_star;
    if sd <= 0.0 {
        return Ok(gain.max(0.0));
    }
    let z = gain / sd;
    Ok(gain * std_normal_cdf(z) + sd * std_normal_pdf(z))
}

/// Which acquisition drives the proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionKind {
    /// Exploration AF for LF sources, improvement for HF, all cost-scaled.
    CostAware,
    /// Expected improvement on every source (meant for single-source runs).
    SingleFidelityEi,
}

/// Inner-search controls.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Sobol starts per source for the continuous dimensions.
    pub starts: usize,
    /// How many of the best starts get a quasi-Newton polish.
    pub polish_top: usize,
    /// Iteration cap of each polish run.
    pub polish_iters: usize,
    /// Categorical spaces up to this size are enumerated exhaustively.
    pub max_enumerated: usize,
    /// Larger categorical spaces are sampled with this many draws.
    pub sampled_combos: usize,
    /// Candidates within this distance (unit-cube infinity norm) of an
    /// existing sample from the same source are replaced by the next-best
    /// candidate.
    pub duplicate_tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 64,
            polish_top: 8,
            polish_iters: 12,
            max_enumerated: 4096,
            sampled_combos: 1024,
            duplicate_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Winner of one source's inner maximization.
#[derive(Debug, Clone)]
pub struct SourceCandidate {
    pub source: usize,
    pub point: MixedInput,
    pub raw_value: f64,
    pub scaled_value: f64,
}

/// The proposed next evaluation with full per-source provenance.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub point: MixedInput,
    pub source: usize,
    pub raw_value: f64,
    pub scaled_value: f64,
    pub per_source_candidates: Vec<SourceCandidate>,
}

/// Solve the per-source inner maximizations, scale by costs, and return the
/// argmax pair. Ties within 1e-12 relative go to the cheaper source, then
/// the lower index.
pub fn propose(
    model: &TrainedEmulator,
    best: &BestObserved,
    costs: &[f64],
    domain: &Domain,
    kind: AcquisitionKind,
    cfg: &SearchConfig,
) -> Result<Proposal, AcquisitionError> {
    assert!(
        costs.iter().all(|c| *c > 0.0),
        "sampling costs must be positive"
    );
    let num_sources = costs.len();
    let candidates: Vec<Result<SourceCandidate, AcquisitionError>> = (0..num_sources)
        .into_par_iter()
        .map(|source| maximize_for_source(model, best, costs, domain, kind, cfg, source))
        .collect();
    let mut per_source = Vec::with_capacity(num_sources);
    for c in candidates {
        per_source.push(c?);
    }

    let winner = select_winner(&per_source, costs);
    let chosen = per_source[winner].clone();
    Ok(Proposal {
        point: chosen.point,
        source: chosen.source,
        raw_value: chosen.raw_value,
        scaled_value: chosen.scaled_value,
        per_source_candidates: per_source,
    })
}

/// Argmax over the cost-scaled candidates; ties within 1e-12 relative are
/// broken toward the cheaper source, then the lower index.
pub(crate) fn select_winner(per_source: &[SourceCandidate], costs: &[f64]) -> usize {
    let mut winner = 0usize;
    for idx in 1..per_source.len() {
        let cur = &per_source[idx];
        let win = &per_source[winner];
        let scale = cur.scaled_value.abs().max(win.scaled_value.abs());
        let tied = (cur.scaled_value - win.scaled_value).abs() <= 1e-12 * scale;
        if tied {
            if costs[cur.source] < costs[win.source] {
                winner = idx;
            }
        } else if cur.scaled_value > win.scaled_value {
            winner = idx;
        }
    }
    winner
}

fn maximize_for_source(
    model: &TrainedEmulator,
    best: &BestObserved,
    costs: &[f64],
    domain: &Domain,
    kind: AcquisitionKind,
    cfg: &SearchConfig,
    source: usize,
) -> Result<SourceCandidate, AcquisitionError> {
    let y_star = best
        .effective_best(source)
        .ok_or(AcquisitionError::NoFiniteCandidate { index: source })?;
    let hf = best.hf_index();
    let af = |point: &MixedInput| -> f64 {
        let value = match kind {
            AcquisitionKind::CostAware if source != hf => af_lf(model, point, source, y_star),
            AcquisitionKind::CostAware => af_hf(model, point, hf, y_star),
            AcquisitionKind::SingleFidelityEi => expected_improvement(model, point, source, y_star),
        };
        value.unwrap_or(f64::NEG_INFINITY)
    };

    let dx = domain.dims();
    let combos = categorical_combos(domain, cfg, source);
    let starts = continuous_starts(dx, cfg, source);

    // Rank every (combo, start) pair by raw AF value.
    let mut ranked: Vec<(Vec<f64>, Vec<usize>, f64)> = Vec::new();
    for combo in &combos {
        for unit in &starts {
            let point = MixedInput {
                continuous: domain.lerp(unit),
                categorical: combo.clone(),
            };
            let value = af(&point);
            ranked.push((unit.clone(), combo.clone(), value));
        }
    }
    ranked.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal));

    // Quasi-Newton polish of the best starts (continuous dims only).
    if dx > 0 {
        let polish_cfg = OptimizeConfig {
            max_iters: cfg.polish_iters,
            parallel_gradient: false,
            ..OptimizeConfig::default()
        };
        let top = cfg.polish_top.min(ranked.len());
        let polished: Vec<(Vec<f64>, Vec<usize>, f64)> = ranked[..top]
            .par_iter()
            .map(|(unit, combo, _)| {
                let objective = |u: &[f64]| {
                    let clamped: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
                    let point = MixedInput {
                        continuous: domain.lerp(&clamped),
                        categorical: combo.clone(),
                    };
                    -af(&point)
                };
                let res = minimize(&objective, unit, &polish_cfg);
                let clamped: Vec<f64> = res.x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
                let value = -res.value;
                (clamped, combo.clone(), value)
            })
            .collect();
        ranked.extend(polished);
        ranked.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal));
    }

    // Duplicate suppression: skip candidates that coincide with an existing
    // sample of this source, taking the next-best candidate instead.
    let existing: Vec<(Vec<f64>, Vec<usize>)> = model
        .train_inputs()
        .iter()
        .filter(|u| u.source == source)
        .map(|u| {
            (
                domain.to_unit(&u.point.continuous),
                u.point.categorical.clone(),
            )
        })
        .collect();
    let is_duplicate = |unit: &[f64], combo: &[usize]| {
        existing.iter().any(|(ex_u, ex_c)| {
            ex_c.as_slice() == combo
                && unit
                    .iter()
                    .zip(ex_u)
                    .all(|(a, b)| (a - b).abs() <= cfg.duplicate_tol)
        })
    };
    let chosen = ranked
        .iter()
        .find(|(unit, combo, value)| value.is_finite() && !is_duplicate(unit, combo))
        .or_else(|| ranked.iter().find(|(_, _, value)| value.is_finite()))
        .ok_or(AcquisitionError::NoFiniteCandidate { index: source })?;

    let point = MixedInput {
        continuous: domain.lerp(&chosen.0),
        categorical: chosen.1.clone(),
    };
    Ok(SourceCandidate {
        source,
        point,
        raw_value: chosen.2,
        scaled_value: chosen.2 / costs[source],
    })
}

/// Sobol starts in the unit cube, seeded per (search seed, source).
fn continuous_starts(dx: usize, cfg: &SearchConfig, source: usize) -> Vec<Vec<f64>> {
    if dx == 0 {
        return vec![Vec::new()];
    }
    let skip = 1 + Rng64::from_key(&[cfg.seed, 0xA0, source as u64]).next_u64() % 8192;
    sobol_points(dx, cfg.starts.max(1), skip).expect("domain dims within Sobol table")
}

/// All categorical combinations when small, a seeded sample otherwise.
fn categorical_combos(domain: &Domain, cfg: &SearchConfig, source: usize) -> Vec<Vec<usize>> {
    if domain.cardinalities.is_empty() {
        return vec![Vec::new()];
    }
    let total: usize = domain.cardinalities.iter().product();
    if total <= cfg.max_enumerated {
        let mut combos = Vec::with_capacity(total);
        let mut current = vec![0usize; domain.cardinalities.len()];
        loop {
            combos.push(current.clone());
            let mut dim = 0;
            loop {
                current[dim] += 1;
                if current[dim] < domain.cardinalities[dim] {
                    break;
                }
                current[dim] = 0;
                dim += 1;
                if dim == domain.cardinalities.len() {
                    return combos;
                }
            }
        }
    }
    let mut rng = Rng64::from_key(&[cfg.seed, 0xCA7, source as u64]);
    (0..cfg.sampled_combos)
        .map(|_| {
            domain
                .cardinalities
                .iter()
                .map(|&card| rng.below(card))
                .collect()
        })
        .collect()
}
