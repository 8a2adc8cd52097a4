//! `maxgent`: solve generalized-entropy problems, compute concentration
//! thresholds and check them against exhaustive enumeration.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use maxgent_core::oracle::DEFAULT_BUDGET;
use maxgent_core::solver::SolverOptions;

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "maxgent", version, about = "Maximum generalized-entropy inference and concentration thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Relative duality-gap tolerance of the solver.
    #[arg(long, global = true)]
    gap_tol: Option<f64>,

    /// Iteration cap of the solver.
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the problem and report x*, multipliers, sum bounds and nu*.
    Solve(ProblemArg),
    /// Sum bounds, analytic bounds, theta_inf and structural checks.
    Bounds(ProblemArg),
    /// The optimal count vector, optionally after scaling the data.
    Round(Scaled),
    /// Concentration threshold for the entropy or distance sets.
    Threshold(ThresholdArgs),
    /// List every count vector in C(delta) with its number of realizations.
    Enumerate(EnumerateArgs),
    /// Check the ratio bounds against exact enumeration on a tolerance grid.
    Verify(VerifyArgs),
    /// Write the problem with its data multiplied by a factor.
    Scale(ScaleArgs),
}

#[derive(Debug, Args)]
struct ProblemArg {
    /// Problem file (JSON).
    problem: PathBuf,
}

#[derive(Debug, Args)]
struct Scaled {
    problem: PathBuf,
    /// Multiply the data vectors by this factor first.
    #[arg(long)]
    scale_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Entropy,
    Distance,
    AutoDelta,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    problem: PathBuf,
    /// Which threshold to compute; inferred from the tolerance flags when
    /// omitted.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Maximum number of visited search nodes.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long)]
    scale_factor: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long)]
    scale_factor: Option<f64>,
    /// Test hook: added to every ratio bound before the comparison.
    #[arg(long, hide = true)]
    corrupt_bound: Option<f64>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    problem: PathBuf,
    #[arg(long)]
    scale_factor: f64,
}

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or unreadable input.
    Usage(String),
    /// Infeasible, condition violated, soundness violated.
    Math(String),
    /// Enumeration budget exhausted.
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Math(_) => 1,
            Failure::Budget(_) => 2,
            Failure::Usage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Math(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<maxgent_core::Error> for Failure {
    fn from(e: maxgent_core::Error) -> Self {
        use maxgent_core::Error;
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            Error::Format(_) => Failure::Usage(e.to_string()),
            e => Failure::Math(e.to_string()),
        }
    }
}

/// A finished command: what to print and the exit status.
pub struct Outcome {
    pub body: String,
    pub failure: Option<Failure>,
}

impl From<String> for Outcome {
    fn from(body: String) -> Self {
        Outcome { body, failure: None }
    }
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let mut opts = SolverOptions::default();
    if let Some(g) = cli.gap_tol {
        opts.gap_tol = g;
    }
    if let Some(n) = cli.max_iterations {
        opts.max_iterations = n;
    }
    let f = cli.format;
    match cli.command {
        Command::Solve(a) => commands::solve(&a.problem, &opts, f).map(Outcome::from),
        Command::Bounds(a) => commands::bounds(&a.problem, f).map(Outcome::from),
        Command::Round(a) => commands::round(&a.problem, a.scale_factor, &opts, f).map(Outcome::from),
        Command::Threshold(a) => {
            let mode = commands::pick_mode(a.mode, a.delta, a.eta, a.theta)?;
            commands::threshold(&a.problem, mode, a.delta, a.epsilon, a.eta, a.theta, &opts, f).map(Outcome::from)
        }
        Command::Enumerate(a) => {
            commands::enumerate(&a.problem, a.delta, a.budget, a.scale_factor, &opts, f).map(Outcome::from)
        }
        Command::Verify(a) => commands::verify(&a.problem, a.budget, a.scale_factor, a.corrupt_bound, &opts, f),
        Command::Scale(a) => commands::scale(&a.problem, a.scale_factor).map(Outcome::from),
    }
}

fn emit(path: Option<&PathBuf>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(format!("stdout: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let out = cli.out.clone();
    let result = run(cli).and_then(|o| {
        emit(out.as_ref(), &o.body)?;
        o.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
