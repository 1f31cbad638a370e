//! `helm`: synthetic data generation, training, calibration, detection and
//! benchmark sweeps for HELM one-class fault detectors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helm::{ErrorKind, ModelKind, Reading};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "helm",
    version,
    about = "Unsupervised fault detection with hierarchical extreme learning machines"
)]
struct Cli {
    /// Read `key = value` defaults from a file; flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic condition-monitoring dataset.
    Generate(GenerateArgs),
    /// Train a one-class model on healthy rows.
    Train(TrainArgs),
    /// Set the detection threshold from held-out healthy rows.
    Calibrate(CalibrateArgs),
    /// Score rows with a calibrated model.
    Detect(DetectArgs),
    /// Run the repeated synthetic benchmark over a hyperparameter grid.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenerateArgs {
    /// Number of latent base signals.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Sensor reading function: identity or log.
    #[arg(long, default_value = "identity")]
    pub reading: Reading,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 14_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub sensors: usize,
    /// Output directory.
    #[arg(long, env = "HELM_OUTPUT_DIR", default_value = "helm-out")]
    pub out: PathBuf,
    /// Overwrite existing files.
    #[arg(long)]
    pub force: bool,
    /// Accept base-signal counts other than 5 and 10.
    #[arg(long)]
    pub allow_any_n: bool,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Healthy training data (headered CSV).
    #[arg(long)]
    pub data: PathBuf,
    /// Row range `start:end` (0-based, end exclusive); either end may be omitted.
    #[arg(long)]
    pub rows: Option<String>,
    /// Model family: helm, elm or pca-elm.
    #[arg(long, default_value = "helm")]
    pub kind: ModelKind,
    /// Autoencoder widths, one per stacked layer (HELM).
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub l1: Vec<usize>,
    /// One-class layer width [default: 100 for helm and pca-elm, 400 for elm].
    #[arg(long)]
    pub l2: Option<usize>,
    /// Autoencoder L1 weight (HELM).
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    /// Ridge weight of the one-class layer.
    #[arg(long, default_value_t = 1e-5)]
    pub c: f64,
    /// Maximum number of principal components (PCA-ELM).
    #[arg(long, default_value_t = 15)]
    pub l_pca: usize,
    /// Ensemble members.
    #[arg(long, default_value_t = 5)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file [default: OUT/model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, env = "HELM_OUTPUT_DIR", default_value = "helm-out")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CalibrateArgs {
    /// Held-out healthy data (headered CSV).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub rows: Option<String>,
    /// Threshold multiplier.
    #[arg(long, default_value_t = 1.5)]
    pub gamma: f64,
    /// Residual percentile.
    #[arg(long, default_value_t = helm::detector::DEFAULT_PERCENTILE)]
    pub p: f64,
    /// Model file, updated in place [default: OUT/model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, env = "HELM_OUTPUT_DIR", default_value = "helm-out")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DetectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub rows: Option<String>,
    /// Calibrated model file [default: OUT/model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Detections CSV [default: OUT/detections.csv].
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long, env = "HELM_OUTPUT_DIR", default_value = "helm-out")]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchmarkArgs {
    /// Base grid: `reference` (one cell per model) or `full`.
    #[arg(long, default_value = "reference")]
    pub grid: String,
    /// Models to run.
    #[arg(long, value_delimiter = ',', default_value = "helm,elm,pca-elm")]
    pub models: Vec<ModelKind>,
    /// Override the threshold multipliers.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Override the autoencoder widths.
    #[arg(long, value_delimiter = ',')]
    pub l1: Option<Vec<usize>>,
    /// Override the one-class layer widths.
    #[arg(long, value_delimiter = ',')]
    pub l2: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub cs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub l_pca: Option<Vec<usize>>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value = "identity")]
    pub reading: Reading,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 14_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub sensors: usize,
    #[arg(long, default_value_t = 5)]
    pub ensemble: usize,
    #[arg(long, default_value_t = helm::detector::DEFAULT_PERCENTILE)]
    pub p: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, env = "HELM_OUTPUT_DIR", default_value = "helm-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub allow_any_n: bool,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Io => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config::config_path(&args) {
        let entries = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read config {path}: {e}"))
            .and_then(|text| config::parse(&text));
        match entries {
            Ok(entries) => args = config::merge(&args, &entries),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Detect(a) => commands::detect(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
