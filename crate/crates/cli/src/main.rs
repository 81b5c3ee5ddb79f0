use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spi_core::harness::{self, summarize, Problem};
use spi_core::io::{read_model, write_model};
use spi_core::verify::{all_passed, render_table, verify};
use spi_core::{
    solve_method, Domain, ErrorFunction, ExperimentConfig, Method, Policy, Sampling, SolverConfig,
    SpiError, UncertaintySet,
};

/// Safe policy improvement benchmarks.
#[derive(Debug, Parser)]
#[command(name = "spibench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep sample counts and trials on a domain and write a CSV.
    Run(RunArgs),
    /// Solve one model file with one method and print the result as JSON.
    Solve(SolveArgs),
    /// Run the oracle cross-checks; exits nonzero if any fails.
    Verify,
    /// Write a domain model to the JSON interchange format.
    ExportDomain(ExportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long, value_delimiter = ',', default_value = "exp,rwa,rob,rbc")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600,3200")]
    samples: Vec<u64>,
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Override the domain's discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// `uniform` (episodes of the uniform policy) or `per-pair`.
    #[arg(long, default_value = "uniform")]
    sampling: Sampling,
    #[arg(long)]
    out: PathBuf,
    /// Fill runtime_ms with wall-clock times (output is then not reproducible).
    #[arg(long)]
    record_runtime: bool,
    /// Use the grid max-min regret oracle for RBC on scenario domains.
    #[arg(long)]
    oracle: bool,
    /// Print per-point means to stderr.
    #[arg(long)]
    summary: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Model file in the JSON interchange format.
    #[arg(long)]
    mdp: PathBuf,
    /// Take the error function from the model file's `error` field.
    #[arg(long, conflicts_with = "error_constant")]
    error_inline: bool,
    /// Use the same L1 budget for every (state, action).
    #[arg(long)]
    error_constant: Option<f64>,
    #[arg(long)]
    method: Method,
    /// Baseline actions, one per state; overrides the file's baseline.
    #[arg(long, value_delimiter = ',')]
    baseline: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    domain: Domain,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    gamma: Option<f64>,
    /// Export a sampled estimate with its error function instead of the true model.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value = "uniform")]
    sampling: Sampling,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> Result<(), SpiError> {
    let Ok(raw) = std::env::var("SPIBENCH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        SpiError::InvalidArgument(format!(
            "SPIBENCH_THREADS=`{raw}` is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| SpiError::InvalidArgument(format!("thread pool: {e}")))
}

fn run(args: RunArgs) -> Result<ExitCode, SpiError> {
    let cfg = ExperimentConfig {
        domain: args.domain,
        methods: args.methods,
        sample_counts: args.samples,
        trials: args.trials,
        delta: args.delta,
        gamma: args.gamma,
        base_seed: args.seed,
        sampling: args.sampling,
        record_runtime: args.record_runtime,
        oracle: args.oracle,
        solver: SolverConfig::default(),
    };
    let records = harness::run_to_csv(&cfg, &args.out)?;
    let failed = records.iter().filter(|r| r.true_return.is_nan()).count();
    if args.summary {
        eprintln!("method  samples  mean_impr%  min_impr%  safe%  fallback%");
        for s in summarize(&records) {
            eprintln!(
                "{:<6} {:>8} {:>11.2} {:>10.2} {:>6.1} {:>10.1}",
                s.method,
                s.samples,
                s.mean_improvement,
                s.min_improvement,
                100.0 * s.safe_fraction,
                100.0 * s.fallback_fraction
            );
        }
    }
    eprintln!("wrote {} rows to {}", records.len(), args.out.display());
    if failed > 0 {
        eprintln!("{failed} rows failed to solve and were recorded as NaN");
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode, SpiError> {
    let model = read_model(&args.mdp)?;
    let (n, m) = (model.mdp.n_states(), model.mdp.n_actions());
    let error = match (args.error_inline, args.error_constant) {
        (true, _) => model
            .error
            .ok_or_else(|| SpiError::InvalidArgument("model file has no `error` field".into()))?,
        (false, Some(c)) => ErrorFunction::constant(n, m, c),
        (false, None) => ErrorFunction::zeros(n, m),
    };
    let baseline = match args.baseline {
        Some(actions) => Policy::deterministic(&actions, m)?,
        None => model
            .baseline
            .unwrap_or_else(|| Policy::deterministic(&vec![0; n], m).expect("action 0 exists")),
    };
    let set = UncertaintySet::l1(model.mdp.transition().clone(), error)?;
    let cfg = SolverConfig {
        tol: args.tol,
        ..SolverConfig::default()
    };
    let report = solve_method(args.method, &model.mdp, &set, &baseline, &cfg)?;
    let doc = serde_json::json!({
        "method": report.method.to_string(),
        "actions": report.policy.actions(),
        "policy": report.policy,
        "certified_value": report.certified_value,
        "baseline_comparator": report.baseline_comparator,
        "fell_back_to_baseline": report.fell_back_to_baseline,
        "regret_certificate": report.regret_certificate,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(ExitCode::SUCCESS)
}

fn export(args: ExportArgs) -> Result<ExitCode, SpiError> {
    let problem = Problem::build(args.domain, args.gamma, args.seed)?;
    match args.samples {
        Some(n) => {
            let (hat, e, _) = problem.estimate(n, args.sampling, args.delta, args.seed)?;
            write_model(&args.out, &hat, Some(&e), Some(&problem.baseline))?;
        }
        None => write_model(&args.out, &problem.true_mdp, None, Some(&problem.baseline))?,
    }
    eprintln!("wrote {} to {}", args.domain, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run(a) => run(a),
        Command::Solve(a) => solve(a),
        Command::ExportDomain(a) => export(a),
        Command::Verify => {
            let results = verify();
            print!("{}", render_table(&results));
            Ok(if all_passed(&results) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    });
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
