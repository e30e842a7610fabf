use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ae_core::engine::{Pooling, UiDesign};
use ae_core::experiments::{ReportFormat, StartPosition};
use ae_core::predictor::Direction;
use ae_core::tokenizer::Scheme;

pub const DEFAULT_VOCAB: &str = "vocab.txt";
pub const DEFAULT_MODEL: &str = "model.json";

#[derive(Debug, Parser)]
#[command(name = "ae", version, about = "Measure how many keystrokes bidirectional autocomplete saves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train or inspect tokenizers.
    #[command(subcommand)]
    Tokenizer(TokenizerCommand),
    /// Train predictors.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Evaluate a predictor on held-out claims and print one CSV row.
    Eval(EvalArgs),
    /// Run a multi-row experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Render a CSV experiment report in another format.
    Report(ReportArgs),
    /// Serve predictions and interactive sessions over HTTP.
    Serve(ServeArgs),
    /// Generate or split claim files.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Debug, Subcommand)]
pub enum TokenizerCommand {
    Train(TokenizerTrainArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    Train(ModelTrainArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Legacy arrow+tab versus digit-key selection.
    DesignCompare(DesignCompareArgs),
    /// AE ratio from interior starting positions.
    PositionSweep(PositionSweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Write a seeded synthetic patent-style claim file.
    Synth(SynthArgs),
    /// Split a claim file into train and eval files by patent.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct TokenizerTrainArgs {
    /// Claim file (.jsonl) or plain text, one document per line.
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[arg(long, default_value = DEFAULT_VOCAB)]
    pub out: PathBuf,
    #[arg(long, default_value_t = ae_core::tokenizer::DEFAULT_BPE_VOCAB)]
    pub vocab_size: usize,
    /// bpe or whitespace.
    #[arg(long, default_value = "bpe")]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionModeArg {
    /// Separate forward and backward models.
    Dual,
    Forward,
    Backward,
    /// One model trained on forward and reversed copies.
    Mixed,
}

#[derive(Debug, Args)]
pub struct ModelTrainArgs {
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[arg(long, default_value = DEFAULT_VOCAB)]
    pub vocab: PathBuf,
    #[arg(long, default_value = DEFAULT_MODEL)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, default_value_t = ae_core::predictor::DEFAULT_DISCOUNT)]
    pub discount: f64,
    #[arg(long, value_enum, default_value_t = DirectionModeArg::Dual)]
    pub direction_mode: DirectionModeArg,
}

/// Where predictions come from.
#[derive(Debug, Args)]
pub struct PredictorArgs {
    #[arg(long, default_value = DEFAULT_VOCAB)]
    pub vocab: PathBuf,
    /// Trained model file; repeat to compare several [default: model.json].
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// URL of a remote predict route instead of a model file.
    #[arg(long, conflicts_with = "models")]
    pub endpoint: Option<String>,
    /// Tag for the result rows (defaults to the model file stem).
    #[arg(long)]
    pub model_tag: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalSettings {
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value_t = ae_core::engine::DEFAULT_MAX_CONTEXT)]
    pub max_context: usize,
    /// micro or macro.
    #[arg(long, default_value = "micro")]
    pub pooling: Pooling,
    /// Drop steps whose true token is whitespace only.
    #[arg(long)]
    pub skip_empty_tokens: bool,
    /// Legacy design: charge min(rank, typed length) instead of rank.
    #[arg(long)]
    pub legacy_cap: bool,
    /// Worker threads for per-claim evaluation.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or markdown.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Claim file (.jsonl) or plain text, one claim per line.
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// legacy or digit.
    #[arg(long, default_value = "digit")]
    pub design: UiDesign,
    /// forward or backward; plain traversal from the matching end.
    #[arg(long, default_value = "forward")]
    pub direction: Direction,
    /// begin, end, q1, q2, q3 or frac:<r>.
    #[arg(long)]
    pub start: Option<StartPosition>,
    /// Direction of the first leg from --start (defaults to --direction).
    #[arg(long, requires = "start")]
    pub first_leg: Option<Direction>,
    #[command(flatten)]
    pub settings: EvalSettings,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DesignCompareArgs {
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Repeat for several; defaults to forward and backward.
    #[arg(long = "direction")]
    pub directions: Vec<Direction>,
    #[command(flatten)]
    pub settings: EvalSettings,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PositionSweepArgs {
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[arg(long, default_value = "digit")]
    pub design: UiDesign,
    /// Repeat for several; defaults to q1, q2 and q3.
    #[arg(long = "start")]
    pub starts: Vec<StartPosition>,
    /// Repeat for several; defaults to forward and backward.
    #[arg(long = "first-leg")]
    pub first_legs: Vec<Direction>,
    #[command(flatten)]
    pub settings: EvalSettings,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV written by `eval` or `experiment`.
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = DEFAULT_VOCAB)]
    pub vocab: PathBuf,
    /// Model file; repeat to serve several, the first being the default [default: model.json].
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Approximate total claim text size.
    #[arg(long, default_value_t = 2_000_000)]
    pub bytes: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, visible_alias = "data")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_eval: PathBuf,
    /// Share of patents held out.
    #[arg(long, default_value_t = 0.1, conflicts_with = "year_cutoff")]
    pub eval_fraction: f64,
    /// Hold out patents from this year on instead of a random share.
    #[arg(long)]
    pub year_cutoff: Option<i32>,
    /// Keep only patents with a CPC code starting with this prefix.
    #[arg(long)]
    pub cpc: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
