//! `bookqa`: retrieval, weak supervision and evaluation pipeline over
//! NarrativeQA-style book corpora.

mod config;
mod data;
mod eval;
mod labels;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "bookqa",
    version,
    about = "Book question answering: retrieval, weak labels and evaluation"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = "BOOKQA_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Dataset directory with documents.csv, qaps.csv and the story files.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and tokenize the dataset and write a corpus summary.
    Ingest,
    /// Build or query per-book BM25 indexes.
    #[command(subcommand)]
    Index(data::IndexCommand),
    /// Generate weak supervision: distant labels, inverse-cloze data, answer spans.
    #[command(subcommand)]
    Labels(labels::LabelsCommand),
    /// Masked-span pre-reading data.
    #[command(subcommand)]
    Preread(train::PrereadCommand),
    /// Hard-EM ranker training.
    #[command(subcommand)]
    Hardem(train::HardemCommand),
    /// Answer coverage and prediction scoring.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
    /// Annotation analysis.
    #[command(subcommand)]
    Analyze(eval::AnalyzeCommand),
}

/// Shared state handed to every command.
pub struct Ctx {
    pub config: RunConfig,
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(d) = cli.dataset {
        config.dataset.path = Some(d);
    }
    if let Some(o) = cli.out {
        config.output.dir = o;
    }
    let out = config.output.dir.clone();
    let mut ctx = Ctx { config, out };
    match cli.command {
        Command::Ingest => data::ingest(&mut ctx),
        Command::Index(c) => data::index(&mut ctx, c),
        Command::Labels(c) => labels::run(&mut ctx, c),
        Command::Preread(c) => train::preread(&mut ctx, c),
        Command::Hardem(c) => train::hardem(&mut ctx, c),
        Command::Eval(c) => eval::eval(&mut ctx, c),
        Command::Analyze(c) => eval::analyze(&mut ctx, c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
