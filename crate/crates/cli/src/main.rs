//! `ntangled`: train entangled-state generators, build datasets, classify
//! them and analyze their entanglement.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "ntangled", version, about = "Entangled state dataset toolkit")]
struct Cli {
    /// Worker threads; defaults to NTANGLED_THREADS, then to the core count.
    #[arg(long, global = true, env = "NTANGLED_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// A run, as written to `config.json` and read back by `replay`.
#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train a generator towards a target CE.
    TrainGenerator(TrainGeneratorArgs),
    /// Score a generator model on fresh inputs.
    EvalGenerator(EvalGeneratorArgs),
    /// Generate states from a generator model.
    GenDataset(GenDatasetArgs),
    /// Build a depth-labeled dataset.
    DepthDataset(DepthDatasetArgs),
    /// Train the QCNN classifier on labeled state sets.
    TrainClassifier(TrainClassifierArgs),
    /// CE histogram, purities and concurrence by distance.
    Analyze(AnalyzeArgs),
    /// Print entanglement measures of the states in a file as JSON lines.
    Measure(MeasureArgs),
    /// Rerun a command from its config.json.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TrainGenerator(_) => "train-generator",
            Command::EvalGenerator(_) => "eval-generator",
            Command::GenDataset(_) => "gen-dataset",
            Command::DepthDataset(_) => "depth-dataset",
            Command::TrainClassifier(_) => "train-classifier",
            Command::Analyze(_) => "analyze",
            Command::Measure(_) => "measure",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenAnsatz {
    Hwe,
    Sea,
    Conv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inputs {
    /// Computational basis states.
    Basis,
    /// Haar-random product states.
    Product,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gradient {
    Fd,
    Adjoint,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Binary,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Interleaved,
    Blocked,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TrainGeneratorArgs {
    #[arg(long, value_enum)]
    pub ansatz: GenAnsatz,
    #[arg(long)]
    pub qubits: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long)]
    pub target_ce: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Inputs::Product)]
    pub inputs: Inputs,
    /// Defaults to n+1 for basis inputs and 10 for product inputs.
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    /// Weight of the n-tangle penalty (even n only).
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
    #[arg(long, value_enum, default_value_t = Gradient::Fd)]
    pub gradient: Gradient,
    /// HWE only: separate parameters for the second rotation round.
    #[arg(long)]
    pub independent_second_round: bool,
    /// Product states drawn for the held-out success report.
    #[arg(long, default_value_t = 500)]
    pub test_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EvalGeneratorArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = Inputs::Product)]
    pub inputs: Inputs,
    /// Defaults to the model's target.
    #[arg(long)]
    pub target_ce: Option<f64>,
    /// Defaults to the model's delta.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub count: usize,
    /// Also write `dataset.json` with every state carrying this label.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub label: Option<u8>,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DepthDatasetArgs {
    #[arg(long)]
    pub qubits: usize,
    /// Depths labeled 0.
    #[arg(long, value_delimiter = ',', required = true)]
    pub zeros: Vec<usize>,
    /// Depths labeled 1.
    #[arg(long, value_delimiter = ',')]
    pub ones: Vec<usize>,
    /// Samples per depth.
    #[arg(long, default_value_t = 400)]
    pub count: usize,
    /// Draw every circuit parameter per sample.
    #[arg(long)]
    pub resample: bool,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TrainClassifierArgs {
    /// Labeled set files (`dataset.json`), merged.
    #[arg(long, num_args = 1.., required = true)]
    pub data: Vec<PathBuf>,
    /// Held-out labeled sets; without them the data is split.
    #[arg(long, num_args = 1..)]
    pub test: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 2)]
    pub copies: usize,
    #[arg(long, default_value_t = 2)]
    pub measured: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 150)]
    pub epochs: usize,
    #[arg(long, default_value_t = 15)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = Gradient::Adjoint)]
    pub gradient: Gradient,
    #[arg(long, value_enum, default_value_t = Layout::Interleaved)]
    pub layout: Layout,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Labeled sets (`.json`) or state files (`.csv`, anything else binary).
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MeasureArgs {
    /// Labeled set (`.json`) or state file.
    #[arg(long)]
    pub state: PathBuf,
    /// Only this state of the file.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the records to `measure.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write here instead of the recorded output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Bad flag values or inputs; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command, cli.verbose > 0) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 })
        }
    }
}
