use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Stock-trend hidden Markov models: label prices, estimate, analyze, sample.
#[derive(Debug, Parser)]
#[command(name = "trendhmm", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output format [default: json; csv for `ingest`]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// JSON file with default parameters; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Echo the effective configuration as JSON on stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,

    /// Row-sum tolerance for loaded models [default: 1e-9; use 0.01 for
    /// matrices transcribed with 2-3 decimals]
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prices CSV -> labeled series (date,diff,symbol,state)
    Ingest(IngestArgs),
    /// Labeled series -> model JSON and joint transition-emission table
    Estimate(EstimateArgs),
    /// Model JSON -> steady-state distribution and trend report
    Stationary(StationaryArgs),
    /// Model JSON -> sampled path, or best of N sampled paths with --trials
    Generate(GenerateArgs),
    /// Model JSON + symbols -> most probable state path (Viterbi)
    Decode(DecodeArgs),
    /// Model JSON + symbols -> Baum-Welch trained model and likelihood trace
    Train(TrainArgs),
    /// Candidate paths file -> compare sums, fitness and ranking
    Fitness(FitnessArgs),
    /// Prices CSV + lag -> trend report (ingest, estimate, stationary)
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningArg {
    EqualWidth,
    Quantile,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicyArg {
    Decrease,
    Increase,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingArg {
    SameStep,
    NextStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Linear,
    Power,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    /// Prices CSV with a `date,close` header
    #[arg(long, short)]
    pub input: PathBuf,

    /// Input is one close value per line, no header, no dates
    #[arg(long)]
    pub closes_only: bool,

    /// Differencing lag in trading days [default: 1]
    #[arg(long, short)]
    pub k: Option<usize>,

    #[command(flatten)]
    pub binning: BinningArgs,
}

#[derive(Debug, Args)]
pub struct BinningArgs {
    /// How differences map to S1..S6 [default: equal-width]
    #[arg(long, value_enum)]
    pub binning: Option<BinningArg>,

    /// Five ascending cut points for --binning explicit, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thresholds: Option<Vec<f64>>,

    /// Symbol for a zero difference [default: decrease]
    #[arg(long, value_enum)]
    pub zero_policy: Option<ZeroPolicyArg>,
}

#[derive(Debug, Args)]
pub struct SmoothingArgs {
    /// Additive smoothing constant alpha >= 0 [default: 0]
    #[arg(long)]
    pub smoothing: Option<f64>,

    /// Which symbol a state is credited with [default: same-step]
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub prices: PriceArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Labeled series CSV (as written by `ingest`)
    #[arg(long, short)]
    pub input: PathBuf,

    #[command(flatten)]
    pub smoothing: SmoothingArgs,

    /// Also write the bare model JSON here
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    /// Model JSON
    #[arg(long, short)]
    pub model: PathBuf,

    /// Solver [default: linear]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Report title [default: model file name]
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model JSON
    #[arg(long, short)]
    pub model: PathBuf,

    /// Number of states in the path, start state included [default: 7]
    #[arg(long, short = 'L')]
    pub length: Option<usize>,

    /// RNG seed [default: $TRENDHMM_SEED, else random]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Start in S1 before any emission, with a leading start marker
    #[arg(long)]
    pub include_start: bool,

    /// Sample this many paths and keep the most probable [default: 1]
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SymbolArgs {
    /// Observation labels, comma or space separated (e.g. I,D,D)
    #[arg(long, conflicts_with = "symbols_file")]
    pub symbols: Option<String>,

    /// File of observation labels, or a labeled series CSV
    #[arg(long)]
    pub symbols_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Model JSON
    #[arg(long, short)]
    pub model: PathBuf,

    #[command(flatten)]
    pub symbols: SymbolArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Initial model JSON
    #[arg(long, short)]
    pub model: PathBuf,

    #[command(flatten)]
    pub symbols: SymbolArgs,

    /// Iteration cap [default: 100]
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Stop when the log-likelihood gain falls below this [default: 1e-9]
    #[arg(long)]
    pub loglik_tol: Option<f64>,

    /// Lower bound for emission probabilities [default: 0]
    #[arg(long)]
    pub floor: Option<f64>,

    /// Also write the trained model JSON here
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitnessArgs {
    /// JSON: {"sequences":[{"label":..,"states":[..]}],
    /// "reference_compare_sums":[..]}; the reference is optional
    #[arg(long, short)]
    pub paths: PathBuf,

    /// Flag rows whose compare sum differs from the reference by more than
    /// this [default: 0.01]
    #[arg(long)]
    pub reference_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub prices: PriceArgs,

    #[command(flatten)]
    pub smoothing: SmoothingArgs,

    /// Steady-state solver [default: linear]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}
