//! `fairrec`: generate markets, compute and audit recommendation policies,
//! and run experiment sweeps.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairrec_core::als::{fit_preferences, AlsConfig, InteractionLog};
use fairrec_core::datagen::{synth_instance, SynthSpec};
use fairrec_core::experiment::{run_experiment, run_single, ExperimentConfig, Method, RunOptions};
use fairrec_core::solver::StepSchedule;
use fairrec_core::{
    envy_audit, solve, ExamKind, ExaminationFunction, Instance, Objective, Policy, SolverConfig,
    DEFAULT_ENVY_TOLERANCE,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fairrec", version, about = "Fair reciprocal recommendation policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic market as instance JSON.
    Synth(SynthArgs),
    /// Compute a policy with one method and report its metrics.
    Solve(SolveArgs),
    /// Envy audit of a policy on an instance.
    Audit(AuditArgs),
    /// Run an experiment sweep from a JSON config and write the CSV.
    Experiment(ExperimentArgs),
    /// Estimate preferences from an interaction log with ALS.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value = "inv")]
    exam: ExamKind,
    /// Truncate examination after this position.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Constant step size instead of 2/(t+2).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1)]
    inner_steps: usize,
    #[arg(long, default_value_t = 1e-12)]
    utility_floor: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            step: self.step.map_or(StepSchedule::OpenLoop, StepSchedule::Constant),
            inner_steps: self.inner_steps,
            utility_floor: self.utility_floor,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    /// IterLP depth (default min(n, m)).
    #[arg(long)]
    iterlp_depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ENVY_TOLERANCE)]
    tau: f64,
    /// Where to write the policy JSON.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the Frank-Wolfe trace CSV here (sw and nsw only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENVY_TOLERANCE)]
    tau: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// CSV with header `left_id,right_id,direction,signal`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value = "inv")]
    exam: ExamKind,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, default_value_t = 32)]
    factors: usize,
    #[arg(long, default_value_t = 0.1)]
    regularization: f64,
    #[arg(long, default_value_t = 40.0)]
    alpha: f64,
    #[arg(long, default_value_t = 15)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")),
        None => writeln!(std::io::stdout().lock(), "{text}"),
    }
}

fn synth(args: SynthArgs) -> CliResult {
    let spec = SynthSpec { n: args.n, m: args.m, lambda: args.lambda, exam: args.exam, seed: args.seed };
    let inst = synth_instance(&spec)?.with_exam(ExaminationFunction::new(args.exam, args.cutoff));
    emit(args.out.as_deref(), &inst.to_json()?)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    method: Method,
    n: usize,
    m: usize,
    expected_matches: f64,
    envy_left: f64,
    envy_right: f64,
    max_envy_left: f64,
    max_envy_right: f64,
    tau: f64,
}

fn solve_cmd(args: SolveArgs) -> CliResult {
    let inst = Instance::read(&args.instance)?;
    let opts = RunOptions { solver: args.solver.config(), iterlp_depth: args.iterlp_depth, tau: args.tau };
    let (policy, rec) = run_single(&inst, args.method, &opts);
    if let Some(err) = rec.error {
        return Err(err.into());
    }
    let policy = policy.expect("policy present when no error");
    if let Some(path) = &args.out {
        policy.write(path)?;
    }
    if let Some(path) = &args.trace {
        let objective = match args.method {
            Method::Sw => Objective::Sw,
            Method::Nsw => Objective::Nsw,
            other => return Err(format!("--trace needs method sw or nsw, got {other}").into()),
        };
        let (_, trace) = solve(&inst, &SolverConfig { objective, ..opts.solver.clone() })?;
        std::fs::write(path, trace.to_csv())?;
    }
    let summary = SolveSummary {
        method: rec.method,
        n: rec.n,
        m: rec.m,
        expected_matches: rec.expected_matches,
        envy_left: rec.envy_left,
        envy_right: rec.envy_right,
        max_envy_left: rec.max_envy_left,
        max_envy_right: rec.max_envy_right,
        tau: args.tau,
    };
    emit(None, &serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn audit(args: AuditArgs) -> CliResult {
    let inst = Instance::read(&args.instance)?;
    let policy = Policy::read(&args.policy)?;
    fairrec_core::policy::ensure_valid(&inst, &policy)?;
    let report = envy_audit(&inst, &policy, args.tau)?;
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn experiment(args: ExperimentArgs) -> CliResult {
    let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&args.config)?)?;
    if args.out.is_some() {
        cfg.output = args.out;
    }
    let rows = run_experiment(&cfg)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see the .errors.log sidecar", rows.len());
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> CliResult {
    let log = InteractionLog::read_csv(&args.log)?;
    let cfg = AlsConfig {
        factors: args.factors,
        regularization: args.regularization,
        alpha: args.alpha,
        iterations: args.iterations,
        seed: args.seed,
    };
    let prefs = fit_preferences(&log, &cfg)?;
    let inst = prefs.to_instance(ExaminationFunction::new(args.exam, args.cutoff))?;
    emit(args.out.as_deref(), &inst.to_json()?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Audit(a) => audit(a),
        Command::Experiment(a) => experiment(a),
        Command::Ingest(a) => ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
