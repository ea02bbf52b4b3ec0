//! `tula`: run transformed Langevin experiments and the numerical checks.
//!
//! Exit status: 0 success, 1 failed check or divergence, 2 usage or config
//! error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable config, unknown target.
    Usage(String),
    /// A check did not pass or a chain diverged.
    Check(String),
}

#[derive(Parser)]
#[command(
    name = "tula",
    version,
    about = "Transformed unadjusted Langevin sampling for heavy-tailed targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run TULA chains and write CSV traces, a summary and diagnostics.
    Sample(SampleArgs),
    /// Check tail assumptions A1..A5 on a radius grid.
    Check(CheckArgs),
    /// Estimate the LSI constant of the transformed density.
    Lsi(LsiArgs),
    /// Classify the Poincaré-type regime from assumption constants.
    Classify(ClassifyArgs),
    /// Compare gradients and Hessian eigenvalues with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct TargetArgs {
    /// TOML experiment config; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Zoo name: t, t{d}_{kappa}, example2..example6, warmup.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub vartheta: Option<f64>,
    #[arg(long)]
    pub upsilon: Option<f64>,
    /// Extra zoo parameter, `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_key_value)]
    pub params: Vec<(String, f64)>,
    /// Override the paired transform with an exponential tail `e^{b r^β}`.
    #[arg(long = "transform-b", requires = "transform_beta")]
    pub transform_b: Option<f64>,
    #[arg(long = "transform-beta", requires = "transform_b")]
    pub transform_beta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    /// Moment orders `q` for `E|x|^q`; comma separated.
    #[arg(long, value_delimiter = ',')]
    pub moments: Option<Vec<f64>>,
    /// Thresholds `t` for `P(|x| > t)`; comma separated.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Extra reports: lsi, assumptions; comma separated.
    #[arg(long, value_delimiter = ',')]
    pub analyses: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// A1..A5, a full tag, or `all`; repeatable.
    #[arg(long = "assumption", default_value = "all")]
    pub assumptions: Vec<String>,
    /// Candidate constant `name=value` (A, B, alpha, mu, theta, rho, L, m, alpha1, C_tail).
    #[arg(long = "const", value_parser = parse_key_value)]
    pub constants: Vec<(String, f64)>,
    #[arg(long = "r-min")]
    pub r_min: Option<f64>,
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    #[arg(long = "grid-size", default_value_t = 512)]
    pub grid_size: usize,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct LsiArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long = "r-max", default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long = "grid-size", default_value_t = 2001)]
    pub grid_size: usize,
    /// CSV table of (r, lambda_radial, lambda_tangential, beta_bar).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifyArgs {
    /// Which condition the constants describe: `dissipativity` (also A3),
    /// `degenerate_convexity` (also A5) or `strong_convexity` (also A1).
    #[arg(long)]
    pub assumption: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "B")]
    pub b_const: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub vartheta: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
}

#[derive(Args, Debug, Clone)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long = "r-min", default_value_t = 0.01)]
    pub r_min: f64,
    /// Default `3·max(knot, 1)`.
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_key_value(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Check(a) => commands::check(a),
        Command::Lsi(a) => commands::lsi(a),
        Command::Classify(a) => commands::classify(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("tula: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            let _ = cmd
                .error(clap::error::ErrorKind::ValueValidation, msg)
                .print();
            ExitCode::from(2)
        }
    }
}
