//! Command-line workbench: fit emulators on datasets, run repeated
//! multi-fidelity optimization campaigns, and emit plot-ready artifacts
//! (history traces, convergence summaries, RRMSE tables, latent
//! coordinates). Every artifact is accompanied by a JSON manifest; stdout
//! only summarizes what was persisted.

mod aggregate;
mod run_config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mfbo_core::benchmarks::{make_problem, rrmse, Family};
use mfbo_core::campaign::{history_csv, run, BOHistory, MFProblem};
use mfbo_core::emulator::dataset::load_dataset;
use mfbo_core::emulator::{fit, parameter_count, DeltaMode};

use run_config::RunConfig;

#[derive(Parser)]
#[command(
    name = "mfbo",
    about = "Multi-fidelity Bayesian optimization workbench",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an emulator on a CSV dataset and write a fit report.
    Fit(FitArgs),
    /// Run repeated optimization campaigns on a benchmark problem.
    Benchmark(BenchmarkArgs),
    /// Compute the RRMSE table of a benchmark family.
    Rrmse(RrmseArgs),
}

#[derive(Args)]
struct CommonOut {
    /// Output directory (falls back to $MFBO_OUTPUT_DIR, then ./mfbo-output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV dataset path.
    #[arg(long)]
    data: PathBuf,
    /// JSON sidecar path (defaults to the dataset path with a .json
    /// extension).
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long, default_value_t = 0.08)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    coverage_v: f64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate a single nugget shared by every source.
    #[arg(long)]
    shared_nugget: bool,
    /// Add the predictive noise term as a bare nugget (source-formula
    /// compatibility).
    #[arg(long)]
    literal_noise_term: bool,
    /// Keep the printed prior sign inside the argmin (source-formula
    /// compatibility).
    #[arg(long)]
    literal_prior_sign: bool,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark problem name (borehole, wing, toy1d).
    #[arg(long)]
    problem: Option<String>,
    /// JSON run-configuration file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stall_window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    coverage_v: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Force a single shared nugget (ablation baseline).
    #[arg(long)]
    shared_nugget: bool,
    /// HF-only expected-improvement baseline.
    #[arg(long)]
    single_fidelity: bool,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct RrmseArgs {
    /// Benchmark family (borehole, wing, toy1d).
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 10_000)]
    n_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: CommonOut,
}

fn main() {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Rrmse(args) => cmd_rrmse(args),
    };
    if let Err(message) = status {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn resolve_out_dir(out: &CommonOut) -> Result<PathBuf, String> {
    let dir = out
        .out
        .clone()
        .or_else(|| std::env::var_os("MFBO_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mfbo-output"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_manifest(path: &Path, body: serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&body).map_err(|e| e.to_string())?;
    write_file(path, &text)
}

fn cmd_fit(args: FitArgs) -> Result<(), String> {
    let started = Instant::now();
    let out_dir = resolve_out_dir(&args.out)?;
    let sidecar = args
        .sidecar
        .clone()
        .unwrap_or_else(|| args.data.with_extension("json"));
    let dataset = load_dataset(&args.data, &sidecar).map_err(|e| e.to_string())?;

    let config = mfbo_core::emulator::EmulatorConfig {
        epsilon: args.epsilon,
        coverage_v: args.coverage_v,
        restarts: args.restarts,
        seed: args.seed,
        delta_mode: if args.shared_nugget {
            DeltaMode::Shared
        } else {
            DeltaMode::PerSource
        },
        literal_noise_term: args.literal_noise_term,
        literal_prior_sign: args.literal_prior_sign,
        ..mfbo_core::emulator::EmulatorConfig::default()
    };
    let model = fit(&dataset.data, &config).map_err(|e| e.to_string())?;

    let num_sources = dataset.data.space().num_sources;
    let mut latent_csv = String::from("source,name,z1,z2\n");
    let mut sources_json = Vec::new();
    for j in 0..num_sources {
        let z = model.latent_source_position(j).map_err(|e| e.to_string())?;
        let noise = model
            .estimated_noise_variance(j)
            .map_err(|e| e.to_string())?;
        latent_csv.push_str(&format!(
            "{j},{},{},{}\n",
            dataset.source_names[j], z[0], z[1]
        ));
        sources_json.push(json!({
            "index": j,
            "name": dataset.source_names[j],
            "cost": dataset.costs[j],
            "samples": dataset.data.source_counts()[j],
            "estimated_noise_variance": noise,
            "latent_position": [z[0], z[1]],
        }));
    }
    let hyper = model.hyperparameters();
    let report = json!({
        "dataset": args.data.display().to_string(),
        "n": model.training_size(),
        "parameter_count": parameter_count(dataset.data.space(), &config.delta_mode),
        "objective_value": model.objective_value(),
        "in_sample_interval_score": model.in_sample_interval_score().map_err(|e| e.to_string())?,
        "hyperparameters": {
            "beta": hyper.beta,
            "sigma2": hyper.sigma2,
            "omega": hyper.omega,
            "delta": hyper.delta,
        },
        "sources": sources_json,
        "warnings": model.warnings(),
        "variance_clamp_events": model.variance_clamp_events(),
        "coverage_v": args.coverage_v,
        "epsilon": args.epsilon,
    });

    let report_path = out_dir.join("fit_report.json");
    let latent_path = out_dir.join("latent_coords.csv");
    write_manifest(&report_path, report)?;
    write_file(&latent_path, &latent_csv)?;
    write_manifest(
        &out_dir.join("fit_manifest.json"),
        json!({
            "command": "fit",
            "dataset": args.data.display().to_string(),
            "sidecar": sidecar.display().to_string(),
            "seed": args.seed,
            "epsilon": args.epsilon,
            "coverage_v": args.coverage_v,
            "restarts": args.restarts,
            "shared_nugget": args.shared_nugget,
            "literal_noise_term": args.literal_noise_term,
            "literal_prior_sign": args.literal_prior_sign,
            "version": env!("CARGO_PKG_VERSION"),
            "artifacts": ["fit_report.json", "latent_coords.csv"],
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;

    println!("wrote {}", report_path.display());
    println!("wrote {}", latent_path.display());
    for warning in model.warnings() {
        println!("warning: {warning}");
    }
    for j in 0..num_sources {
        let noise = model
            .estimated_noise_variance(j)
            .map_err(|e| e.to_string())?;
        println!(
            "source {} ({}): estimated noise variance {noise:.6}",
            j, dataset.source_names[j]
        );
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), String> {
    let started = Instant::now();
    let out_dir = resolve_out_dir(&args.out)?;

    // Declarative config file, then flag overrides.
    let mut config: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?
        }
        None => RunConfig::default(),
    };
    if let Some(problem) = &args.problem {
        config.problem = problem.clone();
    }
    if let Some(budget) = args.budget {
        config.budget = Some(budget);
    }
    if let Some(reps) = args.reps {
        config.repetitions = reps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(window) = args.stall_window {
        config.stall_window = window;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(v) = args.coverage_v {
        config.coverage_v = v;
    }
    if let Some(restarts) = args.restarts {
        config.restarts = restarts;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if args.shared_nugget {
        config.shared_nugget = true;
    }
    if args.single_fidelity {
        config.single_fidelity = true;
    }
    config.validate()?;
    if config.problem.is_empty() {
        return Err("no problem given (use --problem or a config file)".into());
    }

    let family = Family::from_name(&config.problem).map_err(|e| e.to_string())?;
    let (mut problem, mut n_init, default_budget) = make_problem(family);
    if let Some(custom) = &config.n_init {
        if custom.len() != n_init.len() {
            return Err(format!(
                "n_init has {} entries; problem {} declares {} sources",
                custom.len(),
                config.problem,
                n_init.len()
            ));
        }
        n_init = custom.clone();
    }
    if config.single_fidelity {
        n_init = vec![n_init[problem.hf_index]];
        problem = problem.single_fidelity();
    }
    let budget = config.budget.unwrap_or(default_budget);

    let results = run_repetitions(&problem, &config, budget, &n_init);
    let mut histories = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (rep, result) in results.into_iter().enumerate() {
        match result {
            Ok(history) => histories.push((rep, history)),
            Err(e) => failures.push(format!("repetition {rep}: {e}")),
        }
    }

    // Persist per-repetition histories (also for partially failed studies).
    let mut rep_summaries = Vec::new();
    for (rep, history) in &histories {
        let path = out_dir.join(format!("history_rep_{rep:03}.csv"));
        write_file(&path, &history_csv(history, &problem))?;
        rep_summaries.push(json!({
            "repetition": rep,
            "seed": config.seed + *rep as u64,
            "file": path.file_name().unwrap().to_string_lossy(),
            "iterations": history.iterations(),
            "total_cost": history.total_cost(),
            "final_best_hf": history.final_best_hf(),
            "stop_reason": history.stop_reason.map(|r| r.as_str()),
            "error": history.error,
        }));
    }

    let plain: Vec<BOHistory> = histories.iter().map(|(_, h)| h.clone()).collect();
    let rows = aggregate::convergence_summary(&plain);
    let summary_path = out_dir.join("convergence_summary.csv");
    write_file(&summary_path, &aggregate::summary_csv(&rows))?;

    write_manifest(
        &out_dir.join("benchmark_manifest.json"),
        json!({
            "command": "benchmark",
            "config": config,
            "budget": budget,
            "n_init": n_init,
            "seeds": (0..config.repetitions).map(|r| config.seed + r as u64).collect::<Vec<_>>(),
            "repetitions": rep_summaries,
            "failures": failures,
            "version": env!("CARGO_PKG_VERSION"),
            "artifacts": ["history_rep_*.csv", "convergence_summary.csv"],
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;

    println!(
        "wrote {} history files and {}",
        histories.len(),
        summary_path.display()
    );
    if let Some(last) = rows.last() {
        println!(
            "final best-HF across repetitions at cost {}: min {} median {} max {}",
            last.cost, last.min, last.median, last.max
        );
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("error: {f}");
        }
        return Err(format!("{} repetition(s) failed", failures.len()));
    }
    Ok(())
}

fn run_repetitions(
    problem: &MFProblem,
    config: &RunConfig,
    budget: f64,
    n_init: &[usize],
) -> Vec<Result<BOHistory, String>> {
    use rayon::prelude::*;
    let run_one = |rep: usize| {
        let loop_config = config.loop_config(budget, n_init.to_vec(), config.seed + rep as u64);
        run(problem, &loop_config).map_err(|e| e.to_string())
    };
    if config.workers == 1 {
        (0..config.repetitions).map(run_one).collect()
    } else if config.workers == 0 {
        (0..config.repetitions)
            .into_par_iter()
            .map(run_one)
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("worker pool");
        pool.install(|| {
            (0..config.repetitions)
                .into_par_iter()
                .map(run_one)
                .collect()
        })
    }
}

fn cmd_rrmse(args: RrmseArgs) -> Result<(), String> {
    let started = Instant::now();
    let out_dir = resolve_out_dir(&args.out)?;
    let family = Family::from_name(&args.family).map_err(|e| e.to_string())?;

    let mut csv = String::from("variant,rrmse,n_points,seed\n");
    let mut values = Vec::new();
    for variant in 1..family.num_sources() {
        let value = rrmse(family, variant, args.n_points, args.seed).map_err(|e| e.to_string())?;
        csv.push_str(&format!(
            "LF{variant},{value},{},{}\n",
            args.n_points, args.seed
        ));
        values.push((variant, value));
    }
    let table_path = out_dir.join(format!("rrmse_{}.csv", family.name()));
    write_file(&table_path, &csv)?;
    write_manifest(
        &out_dir.join(format!("rrmse_{}_manifest.json", family.name())),
        json!({
            "command": "rrmse",
            "family": family.name(),
            "n_points": args.n_points,
            "seed": args.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "artifacts": [table_path.file_name().unwrap().to_string_lossy()],
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;

    println!("wrote {}", table_path.display());
    for (variant, value) in values {
        println!("LF{variant}: {value:.4}");
    }
    Ok(())
}
