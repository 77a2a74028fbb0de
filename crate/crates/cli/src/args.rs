use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "bpskrx",
    version,
    about = "Error probabilities of BPSK coherent-state receivers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one receiver over an energy grid and write a dataset.
    Sweep(SweepArgs),
    /// Write the datasets behind one figure, one file per curve.
    Figure(FigureArgs),
    /// Optimize one receiver at a single energy and report its parameters.
    Optimize(OptimizeArgs),
    /// Compare the analytic error with a Monte Carlo estimate at one energy.
    Montecarlo(MonteCarloArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Number of copies N.
    #[arg(long = "n-copies")]
    pub n_copies: Option<usize>,
    /// PNR resolution M.
    #[arg(long)]
    pub pnr: Option<u32>,
    /// Quantum efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Dark-count rate.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Displacement visibility.
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long = "alpha2-min")]
    pub alpha2_min: Option<f64>,
    #[arg(long = "alpha2-max")]
    pub alpha2_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Log-spaced grid (`--log=false` forces linear spacing).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub log: Option<bool>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McArgs {
    /// Monte Carlo trials per point.
    #[arg(long = "mc-trials")]
    pub mc_trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sql, helstrom, kennedy, disp-opt, hynore, dffre or hffre.
    #[arg(long)]
    pub receiver: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// 4, 5a, 5b, 6, 7a, 7b, 8a, 8b, 9a or 9b.
    pub id: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Grid points per curve.
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub receiver: Option<String>,
    /// Signal energy alpha^2.
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub receiver: Option<String>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// fast or full.
    #[arg(long, default_value = "fast")]
    pub suite: String,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    /// Run only these criteria (repeatable).
    #[arg(long = "criterion")]
    pub criteria: Vec<u8>,
    /// Override a tolerance, `name=value` (repeatable).
    #[arg(long = "tolerance")]
    pub tolerances: Vec<String>,
    #[arg(long)]
    pub json: bool,
}
