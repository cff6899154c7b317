//! `headqa`: corpus in, artifacts out.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 remote or I/O
//! failure.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Remote(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io { .. } | CliError::Remote(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "headqa",
    version,
    about = "Extractive headline generation as iterated question answering"
)]
pub struct Cli {
    /// JSON file with run settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus JSONL, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DictArgs {
    /// Dictionary TSV used to rescue title words missing from the text.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Use only the top K dictionary entries.
    #[arg(long)]
    pub dict_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetFormat {
    Jsonl,
    Squad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnswererKind {
    Oracle,
    Lead,
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose every title into spans of its own text.
    Decompose {
        #[command(flatten)]
        io: CorpusArgs,
        #[command(flatten)]
        dict: DictArgs,
    },
    /// Turn decomposable titles into question-answer training samples.
    BuildDataset {
        #[command(flatten)]
        io: CorpusArgs,
        #[command(flatten)]
        dict: DictArgs,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: DatasetFormat,
        /// Also write the dataset statistics JSON here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Rank lowercase title words that are missing from their documents.
    BuildDict {
        #[command(flatten)]
        io: CorpusArgs,
        #[arg(long)]
        min_lowercase_count: Option<u64>,
        #[arg(long)]
        top_n: Option<usize>,
        /// Comma-separated dictionary sizes for a growth curve.
        #[arg(long, value_delimiter = ',')]
        growth: Vec<usize>,
    },
    /// Generate headlines by repeated question answering.
    Generate {
        #[command(flatten)]
        io: CorpusArgs,
        #[arg(long, value_enum)]
        answerer: Option<AnswererKind>,
        /// Answer service URL for `--answerer remote`.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, default_value_t = 4)]
        max_in_flight: usize,
        /// Word-token cap for the lead baseline's single answer.
        #[arg(long, default_value_t = 20)]
        lead_max_tokens: usize,
        /// Titles the generator was trained on, for the repeat rate.
        #[arg(long)]
        training_corpus: Option<PathBuf>,
    },
    /// Bootstrap intervals and agreement for exported scores.
    Stats {
        /// Score records JSONL, as exported by the evaluation service.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        n_resamples: Option<usize>,
        /// Write tier,kind,median,lo,hi rows for plotting.
        #[arg(long)]
        plot_csv: Option<PathBuf>,
    },
    /// Run the blind evaluation service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "headqa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
