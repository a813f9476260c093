use std::time::Duration;

use anyhow::{Context, Result};
use bookqa_core::corpus::{Book, Split};
use bookqa_core::hardem::{
    hard_em, initial_labels, planted_corpus, prepare_questions, serve_scorer, EmQuestion, EmState, ExternalScorer,
    LexicalScorer, PlantedConfig, ReaderScorer,
};
use bookqa_core::index::build_indexes;
use bookqa_core::preread::export_preread;
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_split, write_manifest};
use crate::data::{load, questions, write_json, write_text};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum PrereadCommand {
    /// Write masked-span records to `preread/preread.jsonl`.
    Gen(PrereadArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PrereadArgs {
    /// Fraction of each passage's tokens to mask.
    #[arg(long)]
    ratio: Option<f64>,
    /// Poisson mean of span lengths.
    #[arg(long)]
    lambda: Option<f64>,
    /// Cap on exported passages, sampled with the seed.
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Books whose questions belong to this split.
    #[arg(long, value_parser = parse_split, default_value = "train")]
    split: Split,
}

pub fn preread(ctx: &mut Ctx, cmd: PrereadCommand) -> Result<()> {
    let PrereadCommand::Gen(a) = cmd;
    let c = &mut ctx.config.preread;
    c.mask_ratio = a.ratio.unwrap_or(c.mask_ratio);
    c.poisson_lambda = a.lambda.unwrap_or(c.poisson_lambda);
    if a.pool_size.is_some() {
        c.pool_size = a.pool_size;
    }
    c.seed = a.seed.unwrap_or(c.seed);
    let ds = load(ctx)?;
    let books: Vec<Book> = ds.books_in(a.split).cloned().collect();
    let dir = ctx.out.join("preread");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let n = export_preread(&books, &ctx.config.preread, &dir.join("preread.jsonl"))?;
    write_json(&dir.join("summary.json"), &json!({"books": books.len(), "records": n}))?;
    write_manifest(&ctx.out, "preread gen", serde_json::to_value(&a)?, &ctx.config)
}

#[derive(Subcommand, Debug)]
pub enum HardemCommand {
    /// Train the passage ranker on the dataset's train split.
    Run(HardemArgs),
    /// Train on a synthetic corpus with known answer passages.
    Planted(PlantedArgs),
    /// Serve the built-in lexical reader over stdin/stdout JSON lines.
    ServeScorer,
}

#[derive(Args, Debug, Serialize)]
pub struct ScorerArgs {
    /// `builtin` or `cmd:<shell command>` speaking the JSON-lines protocol.
    #[arg(long, default_value = "builtin")]
    scorer: String,
    /// Seconds to wait for each scorer response.
    #[arg(long, default_value_t = 60)]
    scorer_timeout: u64,
}

impl ScorerArgs {
    fn build(&self) -> Result<Box<dyn ReaderScorer>> {
        if self.scorer == "builtin" {
            return Ok(Box::new(LexicalScorer));
        }
        let cmd = self
            .scorer
            .strip_prefix("cmd:")
            .with_context(|| format!("unknown scorer {:?}; use builtin or cmd:<command>", self.scorer))?;
        Ok(Box::new(ExternalScorer::spawn(
            cmd,
            Duration::from_secs(self.scorer_timeout),
        )?))
    }
}

#[derive(Args, Debug, Serialize)]
pub struct HardemArgs {
    #[arg(long)]
    iters: Option<usize>,
    /// Positives kept per question by the E-step.
    #[arg(long)]
    k: Option<usize>,
    /// BM25 candidates per question.
    #[arg(long)]
    pool_k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scorer: ScorerArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PlantedArgs {
    #[arg(long, default_value_t = 50)]
    books: usize,
    #[arg(long, default_value_t = 10)]
    heldout_books: usize,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scorer: ScorerArgs,
}

pub fn hardem(ctx: &mut Ctx, cmd: HardemCommand) -> Result<()> {
    match cmd {
        HardemCommand::Run(a) => run(ctx, a),
        HardemCommand::Planted(a) => planted(ctx, a),
        HardemCommand::ServeScorer => {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout().lock();
            serve_scorer(stdin, stdout, &LexicalScorer)?;
            Ok(())
        }
    }
}

fn prepare(ctx: &Ctx, split: Split) -> Result<Vec<EmQuestion>> {
    let ds = load(ctx)?;
    let indexes = build_indexes(&ds.books, ctx.config.bm25)?;
    let qs = questions(&ds, Some(split));
    let mut out = Vec::new();
    for book in &ds.books {
        let mine: Vec<_> = qs.iter().copied().filter(|q| q.book_id == book.id).collect();
        if !mine.is_empty() {
            out.extend(prepare_questions(
                book,
                &indexes[&book.id],
                &mine,
                ctx.config.hardem.pool_k,
            )?);
        }
    }
    Ok(out)
}

fn run(ctx: &mut Ctx, a: HardemArgs) -> Result<()> {
    let c = &mut ctx.config.hardem;
    c.iterations = a.iters.unwrap_or(c.iterations);
    c.k = a.k.unwrap_or(c.k);
    c.pool_k = a.pool_k.unwrap_or(c.pool_k);
    c.seed = a.seed.unwrap_or(c.seed);
    ctx.config.validate()?;
    let train = prepare(ctx, Split::Train)?;
    let heldout = prepare(ctx, Split::Valid)?;
    let reader = a.scorer.build()?;
    let init = initial_labels(&train, ctx.config.hardem.k);
    let result = hard_em(reader.as_ref(), &train, init, &heldout, &ctx.config.hardem);
    write_manifest(&ctx.out, "hardem run", serde_json::to_value(&a)?, &ctx.config)?;
    finish(ctx, &train, result)
}

fn planted(ctx: &mut Ctx, a: PlantedArgs) -> Result<()> {
    let c = &mut ctx.config.hardem;
    c.iterations = a.iters.unwrap_or(c.iterations);
    c.seed = a.seed.unwrap_or(c.seed);
    ctx.config.validate()?;
    let corpus = planted_corpus(&PlantedConfig {
        books: a.books,
        heldout_books: a.heldout_books,
        seed: ctx.config.hardem.seed,
        ..PlantedConfig::default()
    })?;
    let (train, heldout) = corpus.em_questions(ctx.config.hardem.pool_k)?;
    let reader = a.scorer.build()?;
    let init = initial_labels(&train, ctx.config.hardem.k);
    let result = hard_em(reader.as_ref(), &train, init, &heldout, &ctx.config.hardem);
    write_manifest(&ctx.out, "hardem planted", serde_json::to_value(&a)?, &ctx.config)?;
    finish(ctx, &train, result)
}

fn write_state(ctx: &Ctx, name: &str, questions: &[EmQuestion], state: &EmState) -> Result<()> {
    let dir = ctx.out.join("hardem");
    let labels: Vec<_> = questions
        .iter()
        .zip(&state.positives)
        .map(|(q, p)| json!({"question_id": q.id, "positives": p}))
        .collect();
    write_json(
        &dir.join(name),
        &json!({
            "iteration": state.iteration,
            "converged_at": state.converged_at,
            "ranker": state.ranker,
            "labels": labels,
        }),
    )?;
    let mut history = String::new();
    for h in &state.history {
        history.push_str(&serde_json::to_string(h)?);
        history.push('\n');
    }
    write_text(&dir.join("history.jsonl"), &history)
}

fn finish(
    ctx: &Ctx,
    questions: &[EmQuestion],
    result: std::result::Result<EmState, bookqa_core::hardem::EmFailure>,
) -> Result<()> {
    match result {
        Ok(state) => write_state(ctx, "state.json", questions, &state),
        Err(f) => {
            if let Some(state) = &f.state {
                write_state(ctx, "partial-state.json", questions, state)?;
            }
            Err(f.into())
        }
    }
}
