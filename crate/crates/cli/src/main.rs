//! `linqaoa`: instance generation, exact solving, optimization, landscapes,
//! transfer batches and studies for linear-schedule QAOA.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LINQAOA_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "linqaoa", version, about = "Linear-schedule QAOA toolkit")]
struct Cli {
    /// Worker threads for batch subcommands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Brute-force ground energy and degeneracy.
    Solve(SolveArgs),
    /// Search the four schedule parameters for one instance.
    Optimize(OptimizeArgs),
    /// Exact-expectation heatmap over a slope/intercept pair.
    Landscape(LandscapeArgs),
    /// Run fixed parameters on a batch of random destinations.
    Transfer(TransferArgs),
    /// Final-state overlap between a source and random destinations.
    Fidelity(FidelityArgs),
    /// Per-instance optima of weighted max-cut across energy scales.
    Study(StudyArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    RandomIsing,
    Maxcut,
    WeightedMaxcut,
    Regular,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory [default: $LINQAOA_OUT_DIR, else "."].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    /// Edge density; not used by `regular`.
    #[arg(long)]
    pub d_edges: Option<f64>,
    /// Vertex degree for `regular`.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Energy scale for `weighted-maxcut`.
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File name inside the output directory.
    #[arg(long, default_value = "instance.json")]
    pub name: String,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Also write every configuration energy to this file.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ParamArgs {
    /// JSON file with gamma_slope, gamma_intcp, beta_slope, beta_intcp.
    #[arg(long, conflicts_with_all = ["gamma_slope", "gamma_intcp", "beta_slope", "beta_intcp"])]
    pub params: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_slope: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_intcp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_slope: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_intcp: Option<f64>,
    /// The given values are for exp(-i gamma ZZ / 2) and exp(-i beta X / 2)
    /// gates; halve them.
    #[arg(long)]
    pub half_angle: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = linqaoa::DEFAULT_LAYERS)]
    pub p: usize,
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    /// 0 optimizes the exact expectation.
    #[arg(long, default_value_t = linqaoa::DEFAULT_SHOTS)]
    pub shots: u64,
    /// Half-width of the search box for every coordinate.
    #[arg(long, default_value_t = linqaoa::optimizer::DEFAULT_BOUND)]
    pub bound: f64,
    /// Search both gamma coordinates on a signed log scale between these
    /// magnitudes, e.g. `1e-4:10`.
    #[arg(long)]
    pub log_gamma: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairArg {
    Gamma,
    Beta,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LandscapeArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "gamma")]
    pub pair: PairArg,
    #[arg(long, default_value_t = linqaoa::DEFAULT_LAYERS)]
    pub p: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    pub res: usize,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub hi: f64,
    /// Values for the pair that is not swept (default: the reference
    /// schedule in full-angle units).
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DestArgs {
    #[arg(long, value_enum, default_value = "random-ising")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d_max: f64,
    /// Energy scale for weighted max-cut destinations.
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long, default_value_t = 256)]
    pub count: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TransferArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = linqaoa::DEFAULT_LAYERS)]
    pub p: usize,
    #[command(flatten)]
    pub dest: DestArgs,
    /// 0 uses exact expectations and exact level probabilities.
    #[arg(long, default_value_t = linqaoa::DEFAULT_SHOTS)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write each destination's histogram.
    #[arg(long)]
    pub histograms: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FidelityArgs {
    /// Source instance; destinations share its size and kind.
    pub source: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = linqaoa::DEFAULT_LAYERS)]
    pub p: usize,
    #[arg(long, default_value_t = 0.1)]
    pub d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d_max: f64,
    #[arg(long, default_value_t = 128)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 5)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0.1)]
    pub d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d_max: f64,
    /// Comma-separated weight factors.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100,1000")]
    pub w: Vec<f64>,
    /// Instances per weight factor.
    #[arg(long, default_value_t = 40)]
    pub per_w: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use linqaoa::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::TooLarge { .. }) => 3,
        Some(Error::Numeric(_)) => 4,
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None if err.downcast_ref::<commands::UsageError>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
