//! `quantumdraw`: data preparation, training, reporting and gradient audits
//! for the hybrid sketch classifier.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use quantumdraw::models::ModelKind;
use quantumdraw::sketchdata::CACHE_ENV;

#[derive(Debug, Parser)]
#[command(name = "quantumdraw", version, about = "Hybrid LSTM + variational circuit sketch classifier")]
pub struct Cli {
    /// Config file (key = value lines) or a run manifest to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for every artifact [default: runs].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for data-parallel loops [default: all cores].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Base seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only print errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch, parse, encode and store a sketch dataset.
    Data(DataArgs),
    /// Train one model kind over one or more seeds.
    Train(TrainArgs),
    /// Summarize experiment records into a table.
    Report(ReportArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Comma-separated categories [default: calculator,camera,cellphone].
    #[arg(long)]
    pub categories: Option<String>,
    /// Download cache directory.
    #[arg(long, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Read `<category>.ndjson` files from this directory instead of downloading.
    #[arg(long, conflicts_with = "synthetic")]
    pub local_dir: Option<PathBuf>,
    /// Use N procedurally generated drawings per class instead of QuickDraw.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Fit tolerance as a fraction of the sketch diagonal [default: 0.02].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Training fraction per class [default: 0.8].
    #[arg(long)]
    pub split: Option<f64>,
    /// Drawings read per category [default: 500].
    #[arg(long)]
    pub cap: Option<usize>,
    /// Drop drawings with more segments than this [default: 64].
    #[arg(long)]
    pub max_segments: Option<usize>,
    /// Dataset file name inside the output directory [default: dataset.qds].
    #[arg(long)]
    pub output: Option<String>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: quantumdraw::models::ModelError| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// baseline, qd, qd-frozen or qd-sep [default: qd].
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<ModelKind>,
    /// Encoded dataset [default: <out>/dataset.qds].
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Epochs per run [default: 100].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Seed count (`5`), list (`1,4,9`) or range (`0..10`) [default: 10].
    #[arg(long)]
    pub seeds: Option<commands::SeedSpec>,
    /// Mini-batch size [default: 32].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    pub lr: Option<f64>,
    /// LSTM hidden size, even [default: 128].
    #[arg(long)]
    pub hidden_size: Option<usize>,
    /// Qubits in the circuit head [default: 5].
    #[arg(long)]
    pub n_qubits: Option<usize>,
    /// Ansatz layers [default: 1].
    #[arg(long)]
    pub hea_layers: Option<usize>,
    /// Feed raw fc_embed outputs as angles instead of π·tanh(z).
    #[arg(long)]
    pub no_squash: bool,
    /// Skip the learning-curve SVGs.
    #[arg(long)]
    pub no_svg: bool,
    /// Run every loop sequentially.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding experiment records [default: <out>].
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// qsim, autograd or model.
    pub scope: Option<String>,
    /// Random instances to check [default: 20].
    #[arg(long)]
    pub instances: Option<usize>,
    /// Test hook: slot whose shift is corrupted, e.g. `train:4`.
    #[arg(long, hide = true)]
    pub corrupt_slot: Option<String>,
    /// Test hook: shift used for the corrupted slot.
    #[arg(long, hide = true, default_value_t = 1.2)]
    pub corrupt_shift: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Failure(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
