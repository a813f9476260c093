use anyhow::Result;
use bookqa_core::corpus::{build_corpus_stats, Split};
use bookqa_core::distant::{ds_labels_all, format_ds, NegativePool};
use bookqa_core::ict::{export_ict, ict_all};
use bookqa_core::index::{build_indexes, AnswerMode, QueryOptions};
use bookqa_core::spanlabel::{weak_label, SpanLabel};
use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_split, write_manifest};
use crate::data::{load, questions, write_json, write_text};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum LabelsCommand {
    /// Distant-supervision passage labels (`labels/ds.tsv`).
    Ds(DsArgs),
    /// Inverse-cloze examples (`labels/ict.jsonl`).
    Ict(IctArgs),
    /// Best answer span per question among retrieved passages (`labels/spans.jsonl`).
    Spans(SpanArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolArg {
    Union,
    QuestionOnly,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswersArg {
    First,
    All,
}

impl From<AnswersArg> for AnswerMode {
    fn from(a: AnswersArg) -> Self {
        match a {
            AnswersArg::First => AnswerMode::First,
            AnswersArg::All => AnswerMode::All,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct DsArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kq: Option<usize>,
    #[arg(long)]
    kqa: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where negatives are drawn from.
    #[arg(long, value_enum)]
    pool: Option<PoolArg>,
    /// Reference answers appended for question+answer retrieval.
    #[arg(long, value_enum)]
    answers: Option<AnswersArg>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
}

#[derive(Args, Debug, Serialize)]
pub struct IctArgs {
    #[arg(long)]
    max_negatives: Option<usize>,
    #[arg(long)]
    min_content_words: Option<usize>,
    #[arg(long)]
    instructive_threshold: Option<f64>,
    /// Only books with questions in this split.
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    /// Question-only BM25.
    Bm25,
    /// BM25 on question plus answer.
    Oracle,
}

#[derive(Args, Debug, Serialize)]
pub struct SpanArgs {
    /// Candidate passages searched per question.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value = "bm25")]
    source: SourceArg,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
}

pub fn run(ctx: &mut Ctx, cmd: LabelsCommand) -> Result<()> {
    match cmd {
        LabelsCommand::Ds(a) => ds(ctx, a),
        LabelsCommand::Ict(a) => ict(ctx, a),
        LabelsCommand::Spans(a) => spans(ctx, a),
    }
}

fn ds(ctx: &mut Ctx, a: DsArgs) -> Result<()> {
    let c = &mut ctx.config.ds;
    c.alpha = a.alpha.unwrap_or(c.alpha);
    c.beta = a.beta.unwrap_or(c.beta);
    c.sigma = a.sigma.unwrap_or(c.sigma);
    c.k_q = a.kq.unwrap_or(c.k_q);
    c.k_qa = a.kqa.unwrap_or(c.k_qa);
    c.seed = a.seed.unwrap_or(c.seed);
    if let Some(p) = a.pool {
        c.negative_pool = match p {
            PoolArg::Union => NegativePool::Union,
            PoolArg::QuestionOnly => NegativePool::QuestionOnly,
        };
    }
    if let Some(m) = a.answers {
        c.answer_mode = m.into();
    }
    let ds = load(ctx)?;
    let indexes = build_indexes(&ds.books, ctx.config.bm25)?;
    let qs = questions(&ds, a.split);
    let labels = ds_labels_all(&ds, &indexes, &qs, &ctx.config.ds)?;
    write_text(&ctx.out.join("labels/ds.tsv"), &format_ds(&labels))?;
    let count = |f: &dyn Fn(&bookqa_core::distant::DsLabels) -> usize| labels.iter().map(f).sum::<usize>();
    let summary = json!({
        "questions": labels.len(),
        "dropped": labels.iter().filter(|l| l.dropped()).count(),
        "positives": count(&|l| l.positives.len()),
        "negatives": count(&|l| l.negatives.len()),
        "filtered_positives": count(&|l| l.filtered_positives().len()),
        "filtered_negatives": count(&|l| l.filtered_negatives().len()),
    });
    write_json(&ctx.out.join("labels/ds-summary.json"), &summary)?;
    write_manifest(&ctx.out, "labels ds", serde_json::to_value(&a)?, &ctx.config)
}

fn ict(ctx: &mut Ctx, a: IctArgs) -> Result<()> {
    let c = &mut ctx.config.ict;
    c.max_negatives = a.max_negatives.unwrap_or(c.max_negatives);
    c.min_content_words = a.min_content_words.unwrap_or(c.min_content_words);
    c.instructive_threshold = a.instructive_threshold.unwrap_or(c.instructive_threshold);
    let ds = load(ctx)?;
    let stats = build_corpus_stats(&ds.books)?;
    let books: Vec<_> = match a.split {
        Some(s) => ds.books_in(s).cloned().collect(),
        None => ds.books.clone(),
    };
    let (examples, report) = ict_all(&books, &stats, &ctx.config.ict)?;
    let path = ctx.out.join("labels/ict.jsonl");
    std::fs::create_dir_all(ctx.out.join("labels"))?;
    export_ict(&examples, &path)?;
    write_json(&ctx.out.join("labels/ict-report.json"), &report)?;
    write_manifest(&ctx.out, "labels ict", serde_json::to_value(&a)?, &ctx.config)
}

#[derive(Serialize)]
#[serde(untagged)]
enum SpanRecord {
    Label(SpanLabel),
    Skipped { question_id: String, skipped: String },
}

fn spans(ctx: &mut Ctx, a: SpanArgs) -> Result<()> {
    let ds = load(ctx)?;
    let indexes = build_indexes(&ds.books, ctx.config.bm25)?;
    let qs = questions(&ds, a.split);
    let records: Vec<SpanRecord> = qs
        .par_iter()
        .map(|qa| -> Result<SpanRecord> {
            let book = ds.book(&qa.book_id).expect("questions only reference loaded books");
            let index = &indexes[&qa.book_id];
            let list = match a.source {
                SourceArg::Bm25 => index.retrieve(&qa.question, a.k, QueryOptions::default())?,
                SourceArg::Oracle => index.oracle_retrieve(
                    &qa.question,
                    &qa.answers,
                    a.k,
                    AnswerMode::First,
                    QueryOptions::default(),
                )?,
            };
            Ok(match weak_label(book, qa, &list) {
                Ok(l) => SpanRecord::Label(l),
                Err(e) => SpanRecord::Skipped {
                    question_id: qa.id.clone(),
                    skipped: e.to_string(),
                },
            })
        })
        .collect::<Result<_>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_text(&ctx.out.join("labels/spans.jsonl"), &text)?;
    write_manifest(&ctx.out, "labels spans", serde_json::to_value(&a)?, &ctx.config)
}
