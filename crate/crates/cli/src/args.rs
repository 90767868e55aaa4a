use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bayesopt",
    version,
    about = "Bayesian optimisation campaigns from the command line"
)]
pub struct Cli {
    /// Campaign directory holding `state.json`.
    #[arg(long, global = true, env = "BAYESOPT_CAMPAIGN_DIR")]
    pub campaign: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a campaign and print the initial design.
    Init(SetupArgs),
    /// Print the next batch of candidates and mark them pending.
    Ask(OutArgs),
    /// Record observations from a CSV of `x_1..x_d,y` rows (`-` reads stdin).
    Tell {
        input: PathBuf,
        /// Accept points that were never asked for.
        #[arg(long)]
        force: bool,
    },
    /// Print the incumbent.
    Best,
    /// Closed loop against a test function.
    Run {
        #[command(flatten)]
        setup: SetupArgs,
        #[command(flatten)]
        function: FunctionArgs,
        /// Continue from the checkpoint in the campaign directory.
        #[arg(long)]
        resume: bool,
        /// Write the evaluation history CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare BO against random and Latin hypercube sampling.
    Bench {
        #[command(flatten)]
        setup: SetupArgs,
        #[command(flatten)]
        function: FunctionArgs,
        /// Number of repetitions, seeds `0..seeds`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Write the per-evaluation traces CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the evaluation history as CSV.
    Export(OutArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Single,
    Joint,
    Sequential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AcquisitionArg {
    Ei,
    Ucb,
    Mcei,
    Mcucb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FunctionArg {
    Ackley,
    Hartmann3,
    Hartmann6,
}

#[derive(Debug, Clone, Args)]
pub struct SetupArgs {
    /// JSON file with optional `space`, `campaign` and `seed` entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the six-dimensional case-study space and configuration.
    #[arg(long)]
    pub case_study: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub init_points: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub acquisition: Option<AcquisitionArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub fix_base_samples: bool,
    /// Box bounds as `LO:HI` per dimension, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Vec<String>,
    /// Restrict a dimension to listed values, `DIM=V1,V2,...` (0-based DIM).
    #[arg(long)]
    pub discrete: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FunctionArgs {
    #[arg(long, value_enum)]
    pub function: FunctionArg,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    /// Ackley dimension.
    #[arg(long)]
    pub dims: Option<usize>,
}
