//! `topicpulse` command-line pipeline: synthesize or ingest a corpus, train the
//! two classifiers, score documents, analyse the daily series and build Mapper
//! graphs. Every subcommand writes its outputs plus a run manifest into
//! `--out-dir`.

mod analysis;
mod commands;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

pub use error::{CliError, Result};
use output::Inputs;

#[derive(Debug, Parser)]
#[command(name = "topicpulse", version, about = "Topic-probability time series and Mapper graphs from text corpora")]
pub struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and its event log from a generator config.
    Synth,
    /// Train model A (tags) or model B (topic) on a JSONL corpus.
    Train(TrainArgs),
    /// Score every document of a corpus with a checkpoint.
    Score(ScoreArgs),
    /// Daily series, decomposition, anomalies, profiles and heatmap.
    #[command(alias = "detect")]
    Series(SeriesArgs),
    /// Mapper graph of documents above the topic threshold.
    Mapper(MapperArgs),
    /// Markdown summary of the manifests found in --out-dir.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchFlag {
    #[value(name = "modelA")]
    ModelA,
    #[value(name = "modelB")]
    ModelB,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub arch: ArchFlag,
    /// Target tag for model B (overrides `target_tag` in the config).
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Vocabulary JSON; defaults to the `.vocab.json` file next to the checkpoint.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidesFlag {
    High,
    Low,
    Both,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Model B scores CSV (id,published_at,probability).
    #[arg(long)]
    pub scores: PathBuf,
    /// Holiday calendar CSV (name,date).
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    /// Which anomaly sides to report.
    #[arg(long, value_enum, default_value_t = SidesFlag::High)]
    pub sides: SidesFlag,
    /// Moving-average window (odd) for the smoothed series.
    #[arg(long, default_value_t = 7)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct MapperArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model_a: PathBuf,
    #[arg(long)]
    pub model_b: PathBuf,
    #[arg(long)]
    pub vocab_a: Option<PathBuf>,
    #[arg(long)]
    pub vocab_b: Option<PathBuf>,
    /// Keep documents whose topic probability is strictly above this.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub lens_dim: Option<usize>,
    /// Only documents published in this year.
    #[arg(long)]
    pub year: Option<i32>,
}

/// Runs one parsed invocation and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Synth => commands::synth(cli),
        Command::Train(args) => commands::train(cli, args),
        Command::Score(args) => commands::score(cli, args),
        Command::Series(args) => analysis::series(cli, args),
        Command::Mapper(args) => analysis::mapper(cli, args),
        Command::Report => commands::report(cli),
    }
}

/// Parses the `--config` file into `T`, or `T::default()` without one.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>, inputs: &mut Inputs) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse_config(p, &inputs.read_config(p)?),
    }
}

fn parse_config<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}
