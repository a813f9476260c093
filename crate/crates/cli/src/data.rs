use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bookqa_core::corpus::{load_dataset, tokenize, BookId, Dataset, LoadOptions, Split};
use bookqa_core::index::{build_indexes, read_index, write_index, QueryOptions};
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::write_manifest;
use crate::Ctx;

pub fn load(ctx: &Ctx) -> Result<Dataset> {
    ctx.config.validate()?;
    let path = ctx.config.dataset_path()?;
    let opts = LoadOptions {
        chunk_size: ctx.config.dataset.chunk_size,
        strip_boilerplate: ctx.config.dataset.strip_boilerplate,
        ..LoadOptions::default()
    };
    let ds = load_dataset(path, &opts).with_context(|| format!("loading dataset {}", path.display()))?;
    for e in &ds.errors {
        log::warn!("book {} skipped: {}", e.book_id, e.message);
    }
    Ok(ds)
}

pub fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct BookSummary<'a> {
    id: &'a str,
    kind: bookqa_core::corpus::BookKind,
    tokens: usize,
    passages: usize,
}

pub fn ingest(ctx: &mut Ctx) -> Result<()> {
    let ds = load(ctx)?;
    let mut questions: BTreeMap<&str, usize> = BTreeMap::new();
    for q in &ds.qa_pairs {
        *questions.entry(q.split.as_str()).or_insert(0) += 1;
    }
    let books: Vec<BookSummary> = ds
        .books
        .iter()
        .map(|b| BookSummary {
            id: b.id.as_str(),
            kind: b.kind,
            tokens: b.token_count(),
            passages: b.passages.len(),
        })
        .collect();
    let summary = json!({
        "books": ds.books.len(),
        "tokens": ds.books.iter().map(|b| b.token_count()).sum::<usize>(),
        "passages": ds.books.iter().map(|b| b.passages.len()).sum::<usize>(),
        "questions": questions,
        "dropped_questions": ds.dropped_questions,
        "errors": ds.errors,
        "per_book": books,
    });
    write_json(&ctx.out.join("ingest.json"), &summary)?;
    write_manifest(&ctx.out, "ingest", json!({}), &ctx.config)
}

#[derive(Subcommand, Debug)]
pub enum IndexCommand {
    /// Write `<out>/index/<book>.bqix` for every loaded book.
    Build,
    /// Top-k passages of one index for a query, as JSON lines on stdout.
    Query(QueryArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct QueryArgs {
    /// Index file; defaults to `<out>/index/<book>.bqix`.
    #[arg(long, required_unless_present = "book")]
    index: Option<PathBuf>,
    #[arg(long)]
    book: Option<String>,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Drop stopwords from the query.
    #[arg(long)]
    drop_stopwords: bool,
}

fn check_book_id(id: &BookId) -> Result<()> {
    if id.as_str().is_empty() || id.as_str().contains(['/', '\\']) || id.as_str().starts_with('.') {
        bail!("book id {id:?} cannot be used as a file name");
    }
    Ok(())
}

pub fn index(ctx: &mut Ctx, cmd: IndexCommand) -> Result<()> {
    match cmd {
        IndexCommand::Build => {
            let ds = load(ctx)?;
            let indexes = build_indexes(&ds.books, ctx.config.bm25)?;
            let dir = ctx.out.join("index");
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for b in &ds.books {
                check_book_id(&b.id)?;
                write_index(&indexes[&b.id], &dir.join(format!("{}.bqix", b.id)))?;
            }
            write_manifest(&ctx.out, "index build", json!({}), &ctx.config)
        }
        IndexCommand::Query(args) => {
            let path = match (&args.index, &args.book) {
                (Some(p), _) => p.clone(),
                (None, Some(b)) => {
                    let id = BookId::from(b.as_str());
                    check_book_id(&id)?;
                    ctx.out.join("index").join(format!("{b}.bqix"))
                }
                (None, None) => bail!("pass --index or --book"),
            };
            let index = read_index(&path)?;
            let opts = QueryOptions {
                drop_stopwords: args.drop_stopwords,
            };
            let list = index.retrieve(&tokenize(&args.query), args.k, opts)?;
            for (rank, e) in list.entries.iter().enumerate() {
                println!("{}", json!({"rank": rank + 1, "passage": e.passage, "score": e.score}));
            }
            Ok(())
        }
    }
}

/// Questions of the requested split, or all of them.
pub fn questions(ds: &Dataset, split: Option<Split>) -> Vec<&bookqa_core::corpus::QaPair> {
    ds.qa_pairs
        .iter()
        .filter(|q| split.is_none_or(|s| q.split == s))
        .collect()
}
