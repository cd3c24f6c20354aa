//! `rgrk`: generate instances, run solves and seeded benchmark batteries,
//! evaluate convergence bounds and fit B-spline surfaces.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgrk_core::surface::{KnotRule, ParamRule};
use rgrk_core::{Family, Method, Sampling, SolverConfig};

/// Exit status of a run that did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    MaxIters,
}

impl Outcome {
    pub fn of(converged: bool) -> Self {
        if converged {
            Outcome::Converged
        } else {
            Outcome::MaxIters
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "rgrk",
    version,
    about = "Greedy randomized Kaczmarz solvers for A X B = C"
)]
pub struct Cli {
    /// Base seed for problem generation and index sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance as CSV matrices.
    Generate(GenerateArgs),
    /// Solve one instance, writing a history CSV and a summary JSON.
    Solve(SolveArgs),
    /// Repeated seeded solves per method and theta, aggregated into a table.
    Bench(BenchArgs),
    /// Spectral constants and convergence factors over an (alpha, beta) grid.
    Bounds(BoundsArgs),
    /// Fit a tensor-product B-spline surface to sampled data.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    /// Ranks of A and B for the lowrank family.
    #[arg(long, value_parser = parse_list::<2>, value_name = "R1,R2")]
    pub ranks: Option<[usize; 2]>,
}

/// Either a directory written by `generate` or an inline family spec.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, conflicts_with_all = ["family", "dims", "ranks"])]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value = "dense")]
    pub family: Family,
    #[arg(long, value_parser = parse_list::<3>, default_value = "20,5,10", value_name = "M,N,P")]
    pub dims: [usize; 3],
    #[arg(long, value_parser = parse_list::<2>, value_name = "R1,R2")]
    pub ranks: Option<[usize; 2]>,
}

/// Parses exactly `N` comma-separated counts.
fn parse_list<const N: usize>(s: &str) -> Result<[usize; N], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<usize>| format!("expected {N} comma-separated values, got {}", v.len()))
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "me-rgrk")]
    pub method: Method,
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,
    /// Step size; defaults to the method's own.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Momentum weight; defaults to the method's own.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Stop once the relative residual norm reaches this value.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value = "proportional")]
    pub sampling: Sampling,
    /// Recompute the residual from scratch every this many steps.
    #[arg(long, default_value_t = 5000)]
    pub refresh: usize,
    /// Record the residual every this many steps.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
}

impl SolverArgs {
    pub fn config(&self, method: Method, seed: u64) -> SolverConfig {
        let (a0, b0) = method.default_params();
        let mut cfg = SolverConfig::new(method)
            .with_seed(seed)
            .with_theta(self.theta)
            .with_params(self.alpha.unwrap_or(a0), self.beta.unwrap_or(b0))
            .with_tol(self.tol)
            .with_max_iters(self.max_iters);
        cfg.sampling = self.sampling;
        cfg.refresh_period = self.refresh;
        cfg.history_stride = self.stride;
        cfg
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "me,pm,nm")]
    pub methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    pub thetas: Vec<f64>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.8,1,1.5")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.3,0.5")]
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ParamChoice {
    Chord,
    Sampling,
}

impl From<ParamChoice> for ParamRule {
    fn from(c: ParamChoice) -> Self {
        match c {
            ParamChoice::Chord => ParamRule::Chord,
            ParamChoice::Sampling => ParamRule::Sampling,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KnotChoice {
    Averaging,
    Uniform,
}

impl From<KnotChoice> for KnotRule {
    fn from(c: KnotChoice) -> Self {
        match c {
            KnotChoice::Averaging => KnotRule::Averaging,
            KnotChoice::Uniform => KnotRule::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub surface: u8,
    /// Data points along the first parameter.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Data points along the second parameter.
    #[arg(long, default_value_t = 40)]
    pub p: usize,
    /// Control points per direction.
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ParamChoice::Chord)]
    pub params: ParamChoice,
    #[arg(long, value_enum, default_value_t = KnotChoice::Averaging)]
    pub knots: KnotChoice,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let breach = err
        .chain()
        .filter_map(|e| e.downcast_ref::<rgrk_core::Error>())
        .any(rgrk_core::Error::is_invariant_breach);
    if breach {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::MaxIters) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
