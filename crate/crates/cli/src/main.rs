mod commands;
mod error;
mod profile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vesselrbf::dataio::Split;

use crate::error::{CliError, Kind};
use crate::profile::Profile;

/// Environment variable selecting the number of worker threads.
pub const WORKERS_ENV: &str = "VESSELRBF_WORKERS";

/// Surface pressure and wall shear stress prediction on vessel geometries:
/// synthetic data generation, low-fidelity labels, training, evaluation and
/// FLOP benchmarks.
///
/// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical failure.
/// Set VESSELRBF_WORKERS to fix the worker thread count (results do not depend on it).
#[derive(Debug, Parser)]
#[command(name = "vesselrbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic Poiseuille-labeled single-vessel cases and a manifest.
    Generate(GenerateArgs),
    /// Solve the low-fidelity model on every case; optionally write relabeled copies.
    Lowfi(LowfiArgs),
    /// Train a model; writes config.json, log.jsonl, last.ckpt and best.ckpt.
    Train(TrainArgs),
    /// Evaluate a checkpoint (or a baseline predictor) on one split.
    Eval(EvalArgs),
    /// FLOP tables over center and query counts, plus parameter counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of cases.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    /// Train/val/test fractions, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.1, 0.1], conflicts_with = "split_counts")]
    pub split: Vec<f64>,
    /// Exact train/val/test counts, comma-separated; must sum to --n.
    #[arg(long, value_delimiter = ',')]
    pub split_counts: Option<Vec<usize>>,
    /// JSON file with sampling ranges; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Vessel length range in mm, `min,max` [default: 40,70].
    #[arg(long, value_delimiter = ',')]
    pub length: Option<Vec<f64>>,
    /// Outlet/inlet radius ratio range [default: 0.6,0.8].
    #[arg(long, value_delimiter = ',')]
    pub taper: Option<Vec<f64>>,
    /// Stenosis severity range [default: 0.3,0.7].
    #[arg(long, value_delimiter = ',')]
    pub severity: Option<Vec<f64>>,
    /// Inlet flow range in mm³/s [default: 1000,4000].
    #[arg(long, value_delimiter = ',')]
    pub flow: Option<Vec<f64>>,
    /// Centerline stations per case [default: 128].
    #[arg(long)]
    pub stations: Option<usize>,
    /// Wall points per station ring [default: 16].
    #[arg(long)]
    pub per_ring: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

impl SplitArg {
    pub fn splits(self) -> Vec<Split> {
        match self {
            SplitArg::Train => vec![Split::Train],
            SplitArg::Val => vec![Split::Val],
            SplitArg::Test => vec![Split::Test],
            SplitArg::All => vec![Split::Train, Split::Val, Split::Test],
        }
    }
}

#[derive(Debug, Args)]
pub struct FluidArgs {
    /// Dynamic viscosity in Pa·s.
    #[arg(long, default_value_t = 0.004)]
    pub mu: f64,
    /// Density in g/mL.
    #[arg(long, default_value_t = 1.06)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct LowfiArgs {
    /// Manifest (manifest.jsonl) listing the cases.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    pub split: SplitArg,
    /// Write the per-case table here instead of stdout.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Write copies of the cases with low-fidelity pressure/WSS labels and a
    /// manifest with the same splits into this directory.
    #[arg(long)]
    pub relabel: Option<PathBuf>,
    #[command(flatten)]
    pub fluid: FluidArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Manifest (manifest.jsonl) with train and val splits.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Run directory for config, log and checkpoints.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Profile::Desk)]
    pub profile: Profile,
    /// Configuration override `model.<field>=<value>` or `train.<field>=<value>`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shorthand for `--set train.seed=<seed>`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from <out>/last.ckpt; its configuration replaces --profile.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many epochs of this invocation without changing the
    /// schedule; continue later with --resume.
    #[arg(long)]
    pub stop_after: Option<usize>,
    /// Write last.ckpt every this many epochs (always after the final epoch).
    #[arg(long, default_value_t = 1)]
    pub checkpoint_every: usize,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Predictor {
    /// The trained model in --checkpoint.
    Model,
    /// The low-fidelity (Poiseuille) solution.
    Lowfi,
    /// The stored labels themselves (sanity check; errors are zero).
    Labels,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Checkpoint to evaluate; required for --predictor model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = Predictor::Model)]
    pub predictor: Predictor,
    /// FFR threshold below which a case counts as significant.
    #[arg(long, default_value_t = vesselrbf::metrics::DEFAULT_FFR_THRESHOLD)]
    pub threshold: f64,
    /// Directory for eval_cases.csv and eval_summary.json; the summary is
    /// always printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fluid: FluidArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Profile::Paper)]
    pub profile: Profile,
    /// Model override `model.<field>=<value>`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Center counts M for the center sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256, 512, 1024])]
    pub centers: Vec<usize>,
    /// Query counts N for the query sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [256, 512, 1024, 2048])]
    pub queries: Vec<usize>,
    /// Query count used in the center sweep.
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    /// Center count used in the query sweep.
    #[arg(long, default_value_t = 128)]
    pub m: usize,
    /// Count one FLOP per multiply-accumulate instead of two.
    #[arg(long)]
    pub mac_as_one: bool,
    /// Directory for centers.csv, queries.csv and params.json; the summary is
    /// always printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure {n} workers: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_workers()?;
    match cli.command {
        Command::Generate(a) => commands::generate::run(a),
        Command::Lowfi(a) => commands::lowfi::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Bench(a) => commands::bench::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Kind::Usage.exit_code() as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
