//! The optimization campaign: Sobol initialization, the fit/propose/evaluate
//! cycle, budget accounting, stop rules, and history capture.
//!
//! Outputs are canonicalized to maximization internally (minimization
//! problems are negated at ingestion); history records carry problem-unit
//! values.

use std::sync::Arc;

use crate::acquisition::{
    propose, AcquisitionKind, BestObserved, Domain, Proposal, SearchConfig,
};
use crate::emulator::{
    fit_with_options, AugmentedInput, EmulatorConfig, FitOptions, InputSpace, MixedInput,
    TrainingData,
};
use crate::error::CampaignError;
use crate::mathkit::{Rng64, SobolStream};

/// Evaluator signature of a data source.
pub type SourceFn = Arc<dyn Fn(&MixedInput) -> Result<f64, String> + Send + Sync>;

/// A data source: a noiseless evaluator plus its sampling cost and the
/// Gaussian noise variance injected on top of every evaluation.
#[derive(Clone)]
pub struct Source {
    pub name: String,
    pub cost: f64,
    pub noise_var: f64,
    pub eval: SourceFn,
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Source")
            .field("name", &self.name)
            .field("cost", &self.cost)
            .field("noise_var", &self.noise_var)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Problem units -> canonical maximization units (and back; the map is
    /// its own inverse).
    #[inline]
    pub fn canonical(&self, y: f64) -> f64 {
        match self {
            Sense::Minimize => -y,
            Sense::Maximize => y,
        }
    }
}

/// A multi-fidelity problem: the evaluable sources, the design domain, the
/// optimization sense, and which source is the high-fidelity one.
#[derive(Debug, Clone)]
pub struct MFProblem {
    pub sources: Vec<Source>,
    pub hf_index: usize,
    pub domain: Domain,
    pub sense: Sense,
}

impl MFProblem {
    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.sources.is_empty() {
            return Err(CampaignError::InvalidProblem("no sources".into()));
        }
        if self.hf_index >= self.sources.len() {
            return Err(CampaignError::InvalidProblem(format!(
                "hf_index {} out of range for {} sources",
                self.hf_index,
                self.sources.len()
            )));
        }
        if self.sources.iter().any(|s| !(s.cost > 0.0)) {
            return Err(CampaignError::InvalidProblem(
                "all sampling costs must be positive".into(),
            ));
        }
        if self.domain.lower.len() != self.domain.upper.len() {
            return Err(CampaignError::InvalidProblem(
                "domain bounds have mismatched lengths".into(),
            ));
        }
        if self
            .domain
            .lower
            .iter()
            .zip(&self.domain.upper)
            .any(|(lo, hi)| !(hi > lo))
        {
            return Err(CampaignError::InvalidProblem(
                "domain bounds must satisfy lower < upper".into(),
            ));
        }
        Ok(())
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.cost).collect()
    }

    pub fn input_space(&self) -> Result<InputSpace, CampaignError> {
        Ok(InputSpace::new(
            self.domain.dims(),
            self.domain.cardinalities.clone(),
            self.sources.len(),
        )?)
    }

    /// Restrict the problem to its high-fidelity source only (for
    /// single-fidelity baselines run through the same harness).
    pub fn single_fidelity(&self) -> MFProblem {
        MFProblem {
            sources: vec![self.sources[self.hf_index].clone()],
            hf_index: 0,
            domain: self.domain.clone(),
            sense: self.sense,
        }
    }
}

/// Refit schedule used inside the loop: every iteration is warm-started
/// from the previous optimum, with fresh prior-drawn restarts added every
/// `fresh_period` iterations.
#[derive(Debug, Clone)]
pub struct RefitPolicy {
    pub fresh_restarts: usize,
    pub fresh_period: usize,
    pub warm_iters: usize,
    pub fresh_iters: usize,
}

impl Default for RefitPolicy {
    fn default() -> Self {
        RefitPolicy {
            fresh_restarts: 1,
            fresh_period: 1,
            warm_iters: 20,
            fresh_iters: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    /// Total sampling budget, initial data included.
    pub budget: f64,
    /// Stop after this many iterations without HF improvement.
    pub stall_window: usize,
    /// Hard iteration cap.
    pub max_iterations: usize,
    pub seed: u64,
    /// Initial samples per source.
    pub n_init: Vec<usize>,
    pub emulator: EmulatorConfig,
    pub search: SearchConfig,
    pub refit: RefitPolicy,
    pub acquisition: AcquisitionKind,
}

impl LoopConfig {
    pub fn new(budget: f64, n_init: Vec<usize>, seed: u64) -> Self {
        LoopConfig {
            budget,
            stall_window: 50,
            max_iterations: 1000,
            seed,
            n_init,
            emulator: EmulatorConfig::default(),
            search: SearchConfig::default(),
            refit: RefitPolicy::default(),
            acquisition: AcquisitionKind::CostAware,
        }
    }
}

/// One evaluated sample; iteration 0 rows are the initial design.
#[derive(Debug, Clone)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub source: usize,
    pub input: MixedInput,
    /// Observed (noisy) output in problem units.
    pub observed: f64,
    pub cost_step: f64,
    pub cost_cumulative: f64,
    /// Best HF observation so far, problem units; None before the first HF
    /// sample.
    pub best_hf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    Stall,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Stall => "stall",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

/// Complete record of a campaign.
#[derive(Debug, Clone)]
pub struct BOHistory {
    pub records: Vec<HistoryRecord>,
    pub init_cost: f64,
    /// None only when the campaign aborted on an error.
    pub stop_reason: Option<StopReason>,
    /// Error marker when training or evaluation failed mid-run; collected
    /// data is preserved in `records`.
    pub error: Option<String>,
    pub seed: u64,
}

impl BOHistory {
    pub fn total_cost(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cost_cumulative)
    }

    pub fn final_best_hf(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.best_hf)
    }

    /// Number of BO iterations recorded (initialization rows not counted).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }
}

/// Strict improvement in canonical units beyond 1e-12 relative tolerance.
#[inline]
fn improved(old: f64, new: f64) -> bool {
    new > old + 1e-12 * old.abs().max(1.0)
}

/// Evaluate the stop rules against a history: budget reached, HF incumbent
/// stalled for `stall_window` iterations, or the iteration safety cap.
pub fn check_stop(history: &BOHistory, sense: Sense, config: &LoopConfig) -> Option<StopReason> {
    if history.total_cost() >= config.budget {
        return Some(StopReason::Budget);
    }
    let iterations = history.iterations();
    if iterations >= config.stall_window {
        let mut last_improvement = 0usize;
        let mut incumbent: Option<f64> = None;
        for record in &history.records {
            let Some(best) = record.best_hf else { continue };
            let best = sense.canonical(best);
            match incumbent {
                None => {
                    incumbent = Some(best);
                    last_improvement = record.iteration;
                }
                Some(old) if improved(old, best) => {
                    incumbent = Some(best);
                    last_improvement = record.iteration;
                }
                _ => {}
            }
        }
        if iterations - last_improvement >= config.stall_window {
            return Some(StopReason::Stall);
        }
    }
    if iterations >= config.max_iterations {
        return Some(StopReason::MaxIterations);
    }
    None
}

/// Generate the per-source Sobol initial designs and evaluate them (with
/// noise injection). Returns the samples in problem units and the cost of
/// the initial data.
pub fn initialize(
    problem: &MFProblem,
    n_init: &[usize],
    seed: u64,
) -> Result<(Vec<(AugmentedInput, f64)>, f64), CampaignError> {
    problem.validate()?;
    if n_init.len() != problem.num_sources() {
        return Err(CampaignError::InvalidProblem(format!(
            "n_init has {} entries for {} sources",
            n_init.len(),
            problem.num_sources()
        )));
    }
    if n_init.iter().all(|&n| n == 0) {
        return Err(CampaignError::EmptyInitialization);
    }

    let dx = problem.domain.dims();
    let cards = &problem.domain.cardinalities;
    let mut samples = Vec::new();
    let mut cost = 0.0;
    for (j, source) in problem.sources.iter().enumerate() {
        // Independent Sobol segment per source, derived from the seed.
        let skip = 1 + Rng64::from_key(&[seed, 0xB00, j as u64]).next_u64() % 65_536;
        let mut stream = if dx > 0 {
            Some(SobolStream::with_skip(dx, skip).map_err(CampaignError::Math)?)
        } else {
            None
        };
        for k in 0..n_init[j] {
            let continuous = match stream.as_mut() {
                Some(s) => problem.domain.lerp(&s.next_point()),
                None => Vec::new(),
            };
            // Stratified cycling over categorical levels.
            let categorical: Vec<usize> = cards
                .iter()
                .enumerate()
                .map(|(v, &card)| (k + v) % card)
                .collect();
            let point = MixedInput {
                continuous,
                categorical,
            };
            let y = evaluate_noisy(problem, j, &point, seed, k as u64)?;
            samples.push((
                AugmentedInput {
                    point,
                    source: j,
                },
                y,
            ));
            cost += source.cost;
        }
    }
    Ok((samples, cost))
}

/// Evaluate source `j` at `point`, adding its keyed Gaussian noise stream.
fn evaluate_noisy(
    problem: &MFProblem,
    j: usize,
    point: &MixedInput,
    seed: u64,
    counter: u64,
) -> Result<f64, CampaignError> {
    let source = &problem.sources[j];
    let y = (source.eval)(point).map_err(|detail| CampaignError::EvaluatorFailed {
        index: j,
        name: source.name.clone(),
        detail,
    })?;
    if source.noise_var > 0.0 {
        let mut rng = Rng64::from_key(&[seed, 0x4015E, j as u64, counter]);
        Ok(y + source.noise_var.sqrt() * rng.normal())
    } else {
        Ok(y)
    }
}

/// Run a full campaign: initialize, then fit -> propose -> evaluate ->
/// append until a stop condition fires. The emulator is refit from scratch
/// every iteration, warm-started at the previous optimum.
pub fn run(problem: &MFProblem, config: &LoopConfig) -> Result<BOHistory, CampaignError> {
    problem.validate()?;
    let space = problem.input_space()?;
    let (init_samples, init_cost) = initialize(problem, &config.n_init, config.seed)?;

    let mut history = BOHistory {
        records: Vec::new(),
        init_cost,
        stop_reason: None,
        error: None,
        seed: config.seed,
    };
    let mut best = BestObserved::new(problem.num_sources(), problem.hf_index);
    let mut data = TrainingData::new(space, Vec::new(), Vec::new())?;
    let mut counters: Vec<u64> = vec![0; problem.num_sources()];
    let mut cumulative = 0.0;
    let mut best_hf_problem: Option<f64> = None;

    for (input, y) in init_samples {
        let j = input.source;
        cumulative += problem.sources[j].cost;
        counters[j] += 1;
        let canonical = problem.sense.canonical(y);
        best.update(j, canonical);
        if j == problem.hf_index {
            best_hf_problem = Some(problem.sense.canonical(best.hf_best().unwrap()));
        }
        history.records.push(HistoryRecord {
            iteration: 0,
            source: j,
            input: input.point.clone(),
            observed: y,
            cost_step: problem.sources[j].cost,
            cost_cumulative: cumulative,
            best_hf: best_hf_problem,
        });
        data.push(input, canonical)?;
    }

    let costs = problem.costs();
    let mut warm: Option<crate::emulator::Hyperparameters> = None;

    for iteration in 1..=config.max_iterations {
        if let Some(reason) = check_stop(&history, problem.sense, config) {
            history.stop_reason = Some(reason);
            break;
        }

        // Full refit each iteration; warm-start plus scheduled fresh
        // restarts after the first fit.
        let fit_result = if warm.is_none() {
            fit_with_options(&data, &config.emulator, &FitOptions::default())
        } else {
            let fresh = if (iteration - 1) % config.refit.fresh_period.max(1) == 0 {
                config.refit.fresh_restarts
            } else {
                0
            };
            let refit_config = EmulatorConfig {
                restarts: fresh,
                max_opt_iters: config.refit.fresh_iters,
                seed: Rng64::from_key(&[config.seed, 0xF0E, iteration as u64]).next_u64(),
                ..config.emulator.clone()
            };
            fit_with_options(
                &data,
                &refit_config,
                &FitOptions {
                    warm_start: warm.clone(),
                    warm_iters: Some(config.refit.warm_iters),
                },
            )
        };
        let model = match fit_result {
            Ok(model) => model,
            Err(e) => {
                history.error = Some(format!("training failed at iteration {iteration}: {e}"));
                break;
            }
        };
        warm = Some(model.hyperparameters().clone());

        let search = SearchConfig {
            seed: Rng64::from_key(&[config.seed, 0x5EA, iteration as u64]).next_u64(),
            ..config.search.clone()
        };
        let proposal: Proposal = match propose(
            &model,
            &best,
            &costs,
            &problem.domain,
            config.acquisition,
            &search,
        ) {
            Ok(p) => p,
            Err(e) => {
                history.error = Some(format!("proposal failed at iteration {iteration}: {e}"));
                break;
            }
        };

        // A proposal whose cost would exceed the budget is not issued.
        let j = proposal.source;
        if cumulative + problem.sources[j].cost > config.budget {
            history.stop_reason = Some(StopReason::Budget);
            break;
        }

        let y = match evaluate_noisy(problem, j, &proposal.point, config.seed, counters[j]) {
            Ok(y) => y,
            Err(e) => {
                history.error = Some(e.to_string());
                break;
            }
        };
        counters[j] += 1;
        cumulative += problem.sources[j].cost;
        let canonical = problem.sense.canonical(y);
        best.update(j, canonical);
        if j == problem.hf_index {
            best_hf_problem = Some(problem.sense.canonical(best.hf_best().unwrap()));
        }
        history.records.push(HistoryRecord {
            iteration,
            source: j,
            input: proposal.point.clone(),
            observed: y,
            cost_step: problem.sources[j].cost,
            cost_cumulative: cumulative,
            best_hf: best_hf_problem,
        });
        data.push(
            AugmentedInput {
                point: proposal.point,
                source: j,
            },
            canonical,
        )?;

        if history.stop_reason.is_some() {
            break;
        }
    }

    if history.stop_reason.is_none() && history.error.is_none() {
        // Loop exhausted max_iterations (or the cap was hit inside).
        history.stop_reason = check_stop(&history, problem.sense, config)
            .or(Some(StopReason::MaxIterations));
    }
    Ok(history)
}

/// Render a history as a comma-separated table with the columns
/// iteration, source, cost_step, cost_cumulative, x_1..x_dx, t_1..t_dt,
/// y_observed, y_best_hf.
pub fn history_csv(history: &BOHistory, problem: &MFProblem) -> String {
    let dx = problem.domain.dims();
    let dt = problem.domain.cardinalities.len();
    let mut out = String::new();
    out.push_str("iteration,source,cost_step,cost_cumulative");
    for d in 1..=dx {
        out.push_str(&format!(",x_{d}"));
    }
    for t in 1..=dt {
        out.push_str(&format!(",t_{t}"));
    }
    out.push_str(",y_observed,y_best_hf\n");
    for r in &history.records {
        out.push_str(&format!(
            "{},{},{},{}",
            r.iteration, problem.sources[r.source].name, r.cost_step, r.cost_cumulative
        ));
        for x in &r.input.continuous {
            out.push_str(&format!(",{x}"));
        }
        for t in &r.input.categorical {
            out.push_str(&format!(",{t}"));
        }
        match r.best_hf {
            Some(b) => out.push_str(&format!(",{},{b}\n", r.observed)),
            None => out.push_str(&format!(",{},\n", r.observed)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_problem(noise_var: f64) -> MFProblem {
        // Minimize (x-0.7)^2 with a cheap shifted LF companion.
        let hf = Source {
            name: "HF".into(),
            cost: 10.0,
            noise_var,
            eval: Arc::new(|u: &MixedInput| Ok((u.continuous[0] - 0.7).powi(2))),
        };
        let lf = Source {
            name: "LF1".into(),
            cost: 1.0,
            noise_var: 0.0,
            eval: Arc::new(|u: &MixedInput| Ok((u.continuous[0] - 0.72).powi(2) + 0.05)),
        };
        MFProblem {
            sources: vec![hf, lf],
            hf_index: 0,
            domain: Domain::continuous(&[(0.0, 1.0)]),
            sense: Sense::Minimize,
        }
    }

    fn quick_config(budget: f64, seed: u64) -> LoopConfig {
        let mut config = LoopConfig::new(budget, vec![4, 8], seed);
        config.emulator.restarts = 4;
        config.emulator.max_opt_iters = 25;
        config.search.starts = 16;
        config.search.polish_top = 4;
        config.refit = RefitPolicy {
            fresh_restarts: 1,
            fresh_period: 2,
            warm_iters: 10,
            fresh_iters: 15,
        };
        config.stall_window = 10;
        config
    }

    #[test]
    fn initialization_cost_is_the_weighted_sample_count() {
        let problem = quadratic_problem(0.0);
        let (samples, cost) = initialize(&problem, &[4, 8], 1).unwrap();
        assert_eq!(samples.len(), 12);
        assert!((cost - (4.0 * 10.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_initialization_is_deterministic() {
        let problem = quadratic_problem(0.0);
        let (a, _) = initialize(&problem, &[3, 3], 7).unwrap();
        let (b, _) = initialize(&problem, &[3, 3], 7).unwrap();
        for ((ua, ya), (ub, yb)) in a.iter().zip(&b) {
            assert_eq!(ua.point.continuous, ub.point.continuous);
            assert_eq!(ya, yb);
        }
    }

    #[test]
    fn budget_equal_to_init_cost_stops_immediately() {
        let problem = quadratic_problem(0.0);
        let init_cost = 4.0 * 10.0 + 8.0;
        let config = quick_config(init_cost, 3);
        let history = run(&problem, &config).unwrap();
        assert_eq!(history.iterations(), 0);
        assert_eq!(history.stop_reason, Some(StopReason::Budget));
        assert_eq!(history.init_cost, init_cost);
    }

    #[test]
    fn stall_window_boundary_is_exact() {
        // Synthetic history: improvement at iteration 0 only.
        let mk = |iters: usize, window: usize| {
            let mut records = vec![HistoryRecord {
                iteration: 0,
                source: 0,
                input: MixedInput::continuous(vec![0.0]),
                observed: 1.0,
                cost_step: 1.0,
                cost_cumulative: 1.0,
                best_hf: Some(1.0),
            }];
            for k in 1..=iters {
                records.push(HistoryRecord {
                    iteration: k,
                    source: 1,
                    input: MixedInput::continuous(vec![0.0]),
                    observed: 2.0,
                    cost_step: 1.0,
                    cost_cumulative: 1.0 + k as f64,
                    best_hf: Some(1.0),
                });
            }
            let history = BOHistory {
                records,
                init_cost: 1.0,
                stop_reason: None,
                error: None,
                seed: 0,
            };
            let mut config = LoopConfig::new(1e9, vec![1, 1], 0);
            config.stall_window = window;
            check_stop(&history, Sense::Minimize, &config)
        };
        assert_eq!(mk(49, 50), None);
        assert_eq!(mk(50, 50), Some(StopReason::Stall));
    }

    #[test]
    fn budget_rule_fires_at_the_cap() {
        let history = BOHistory {
            records: vec![HistoryRecord {
                iteration: 0,
                source: 0,
                input: MixedInput::continuous(vec![0.0]),
                observed: 1.0,
                cost_step: 40_000.0,
                cost_cumulative: 40_000.0,
                best_hf: Some(1.0),
            }],
            init_cost: 40_000.0,
            stop_reason: None,
            error: None,
            seed: 0,
        };
        let config = LoopConfig::new(40_000.0, vec![1], 0);
        assert_eq!(
            check_stop(&history, Sense::Minimize, &config),
            Some(StopReason::Budget)
        );
    }

    #[test]
    fn campaign_history_invariants_hold() {
        let problem = quadratic_problem(0.01);
        let config = quick_config(120.0, 5);
        let history = run(&problem, &config).unwrap();
        assert!(history.error.is_none(), "{:?}", history.error);
        assert!(history.stop_reason.is_some());
        // Cumulative cost strictly increases by the step cost.
        let mut prev = 0.0;
        for r in &history.records {
            assert!((r.cost_cumulative - prev - r.cost_step).abs() < 1e-9);
            prev = r.cost_cumulative;
        }
        // The incumbent trace never worsens (minimization).
        let mut best = f64::INFINITY;
        for r in &history.records {
            if let Some(b) = r.best_hf {
                assert!(b <= best + 1e-12);
                best = b;
            }
        }
        // Budget safety: at most one overshooting evaluation, never issued.
        let max_cost = problem.sources.iter().map(|s| s.cost).fold(0.0, f64::max);
        assert!(history.total_cost() < config.budget + max_cost);
    }

    #[test]
    fn campaigns_replay_byte_identically() {
        let problem = quadratic_problem(0.04);
        let config = quick_config(100.0, 11);
        let a = run(&problem, &config).unwrap();
        let b = run(&problem, &config).unwrap();
        assert_eq!(history_csv(&a, &problem), history_csv(&b, &problem));
    }

    #[test]
    fn zero_noise_sources_return_identical_values_for_identical_inputs() {
        let problem = quadratic_problem(0.0);
        let config = quick_config(80.0, 2);
        let history = run(&problem, &config).unwrap();
        let mut seen: Vec<(usize, Vec<u64>, f64)> = Vec::new();
        for r in &history.records {
            let bits: Vec<u64> = r.input.continuous.iter().map(|x| x.to_bits()).collect();
            if let Some((_, _, y)) = seen
                .iter()
                .find(|(s, b, _)| *s == r.source && *b == bits)
            {
                assert_eq!(*y, r.observed);
            } else {
                seen.push((r.source, bits, r.observed));
            }
        }
    }

    #[test]
    fn toy_campaign_approaches_the_optimum() {
        let problem = quadratic_problem(0.0);
        let mut config = quick_config(200.0, 17);
        config.stall_window = 15;
        let history = run(&problem, &config).unwrap();
        let best = history.final_best_hf().unwrap();
        assert!(best < 0.05, "best {best}");
    }
}
