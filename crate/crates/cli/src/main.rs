use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use config::TaskKind;

/// Check-worthiness ranking of debate claims and fact-checking of forum answers.
#[derive(Debug, Parser)]
#[command(name = "factcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate corpora and write normalized copies with statistics.
    Ingest(IngestArgs),
    /// Dump the feature matrix of the configured task.
    Features(RunArgs),
    /// Fit a model on the whole corpus, one file per seed.
    Train(RunArgs),
    /// Score and sort debate sentences or forum answers.
    Rank(RankArgs),
    /// Cross-validate the configured task and write a report.
    Eval(RunArgs),
    /// Gather search evidence for every labelled answer.
    FetchEvidence(RunArgs),
}

/// Options shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rerun the experiment recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Directory with resource files under their standard names.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Experiment task.
    #[arg(long, value_enum)]
    pub task: Option<TaskKind>,
    /// Single seed; replaces the configured list.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Feature groups to zero.
    #[arg(long, value_delimiter = ',')]
    pub ablate: Option<Vec<String>>,
    /// Feature groups to keep; every other group is zeroed.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// Multi-task variant: singleton, multi, multi+any, any or singleton+any.
    #[arg(long)]
    pub variant: Option<String>,
    /// Source whose labels are ranked for, or ANY.
    #[arg(long)]
    pub target_source: Option<String>,
    /// Allow network access for evidence retrieval.
    #[arg(long)]
    pub live: bool,
    /// Output directory for the manifest and artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn has_overrides(&self) -> bool {
        self.data.is_some()
            || self.task.is_some()
            || self.seed.is_some()
            || self.seeds.is_some()
            || self.ablate.is_some()
            || self.only.is_some()
            || self.variant.is_some()
            || self.target_source.is_some()
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Debate transcripts (JSONL).
    #[arg(long)]
    pub debates: Option<PathBuf>,
    /// Forum threads (JSONL).
    #[arg(long)]
    pub cqa: Option<PathBuf>,
    /// Token annotations keyed `debate_id/sentence_id` (JSONL).
    #[arg(long)]
    pub tokens: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Transcripts or threads to rank; defaults to the configured corpus.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Model written by `train`; otherwise one is fitted with the first seed.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Features(a) => commands::features(&a),
        Command::Train(a) => commands::train(&a),
        Command::Rank(a) => commands::rank(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::FetchEvidence(a) => commands::fetch_evidence(&a),
    }
}
