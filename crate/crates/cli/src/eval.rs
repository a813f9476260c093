use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bookqa_core::corpus::{QaPair, Split};
use bookqa_core::evalharness::{
    coverage_suite, emit_report, evaluate_predictions, load_predictions, rank_questions, render_table, References,
    ReportRow, ReportTable, RetrievalMode,
};
use bookqa_core::index::{build_indexes, AnswerMode, QueryOptions};
use bookqa_core::taxonomy::{
    decompose, event_answer_subset, fleiss_kappa, label_counts, load_annotations, simple_agreement, AnnotationField,
    AnnotationSet, VerbLexicon,
};
use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{parse_split, write_manifest};
use crate::data::{load, questions, write_text};
use crate::Ctx;

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Share of questions whose answer appears in the top-k retrieved passages.
    Coverage(CoverageArgs),
    /// Score predicted answers (JSON lines with `question_id`, `answer`).
    Score(ScoreArgs),
    /// Re-render JSON-lines reports as aligned tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    /// Query with the question.
    Question,
    /// Query with the question and its first reference answer.
    OracleFirst,
    /// Query with the question and all reference answers.
    OracleAll,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferencesArg {
    All,
    First,
}

#[derive(Args, Debug, Serialize)]
pub struct CoverageArgs {
    /// Retrieval depths.
    #[arg(long, value_delimiter = ',', default_value = "3,5,10,32")]
    k: Vec<usize>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long, value_enum, default_value = "question")]
    mode: ModeArg,
    /// Which reference answers count as found.
    #[arg(long, value_enum, default_value = "all")]
    references: ReferencesArg,
    #[arg(long)]
    drop_stopwords: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Questions to score; defaults to every question with a prediction's split.
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// JSON-lines reports written by other commands.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

pub fn eval(ctx: &mut Ctx, cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Coverage(a) => coverage(ctx, a),
        EvalCommand::Score(a) => score(ctx, a),
        EvalCommand::Report(a) => report(a),
    }
}

fn coverage(ctx: &mut Ctx, a: CoverageArgs) -> Result<()> {
    if a.k.is_empty() {
        bail!("--k needs at least one depth");
    }
    let ds = load(ctx)?;
    let indexes = build_indexes(&ds.books, ctx.config.bm25)?;
    let qs = questions(&ds, a.split);
    let mode = match a.mode {
        ModeArg::Question => RetrievalMode::Question,
        ModeArg::OracleFirst => RetrievalMode::Oracle(AnswerMode::First),
        ModeArg::OracleAll => RetrievalMode::Oracle(AnswerMode::All),
    };
    let references = match a.references {
        ReferencesArg::All => References::All,
        ReferencesArg::First => References::First,
    };
    let opts = QueryOptions {
        drop_stopwords: a.drop_stopwords,
    };
    let depth = a.k.iter().copied().max().unwrap_or(0);
    let items = rank_questions(&ds, &indexes, &qs, depth, mode, opts, references)?;
    let reports = coverage_suite(&items, &a.k)?;
    let name = format!(
        "coverage ({})",
        serde_json::to_value(a.mode)?.as_str().unwrap_or("question")
    );
    emit_report(
        &[ReportTable::coverage(name, &reports)],
        &ctx.out.join("eval"),
        "coverage",
    )?;
    write_manifest(&ctx.out, "eval coverage", serde_json::to_value(&a)?, &ctx.config)
}

fn scored_questions(all: &[QaPair], split: Option<Split>, ids: &[&str]) -> Vec<QaPair> {
    match split {
        Some(s) => all.iter().filter(|q| q.split == s).cloned().collect(),
        None => {
            let splits: Vec<Split> = all
                .iter()
                .filter(|q| ids.contains(&q.id.as_str()))
                .map(|q| q.split)
                .collect();
            all.iter().filter(|q| splits.contains(&q.split)).cloned().collect()
        }
    }
}

fn score(ctx: &mut Ctx, a: ScoreArgs) -> Result<()> {
    let ds = load(ctx)?;
    let preds = load_predictions(&a.predictions)?;
    let ids: Vec<&str> = preds.iter().map(|p| p.question_id.as_str()).collect();
    let qs = scored_questions(&ds.qa_pairs, a.split, &ids);
    let report = evaluate_predictions(&preds, &qs)?;
    let dir = ctx.out.join("eval");
    emit_report(&[ReportTable::metrics("answer metrics", &report)], &dir, "scores")?;
    let mut per = String::new();
    for e in &report.examples {
        per.push_str(&serde_json::to_string(e)?);
        per.push('\n');
    }
    write_text(&dir.join("per-question.jsonl"), &per)?;
    write_manifest(&ctx.out, "eval score", serde_json::to_value(&a)?, &ctx.config)
}

#[derive(Deserialize)]
struct JsonRow {
    table: String,
    label: String,
    columns: Vec<String>,
    values: Vec<f64>,
}

/// Rebuild tables from JSON-lines rows, keeping first-seen order.
pub fn parse_report(text: &str) -> Result<Vec<ReportTable>> {
    let mut tables: Vec<ReportTable> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(line).with_context(|| format!("report line {}", i + 1))?;
        if row.values.len() != row.columns.len() {
            bail!(
                "report line {}: {} values for {} columns",
                i + 1,
                row.values.len(),
                row.columns.len()
            );
        }
        let t = match tables.iter_mut().position(|t| t.name == row.table) {
            Some(p) => &mut tables[p],
            None => {
                tables.push(ReportTable {
                    name: row.table.clone(),
                    columns: row.columns.clone(),
                    rows: Vec::new(),
                });
                tables.last_mut().expect("just pushed")
            }
        };
        if t.columns != row.columns {
            bail!(
                "report line {}: columns differ from earlier rows of table {:?}",
                i + 1,
                row.table
            );
        }
        t.rows.push(ReportRow {
            label: row.label,
            values: row.values,
        });
    }
    Ok(tables)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut tables = Vec::new();
    for p in &a.inputs {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        tables.extend(parse_report(&text).with_context(|| p.display().to_string())?);
    }
    print!("{}", render_table(&tables));
    Ok(())
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Label counts, simple agreement and Fleiss' kappa per annotation field.
    Agreement(AgreementArgs),
    /// Answer metrics grouped by annotated label.
    Decompose(DecomposeArgs),
    /// Questions whose answers contain a verb.
    EventSubset(EventArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct AgreementArgs {
    #[arg(long)]
    annotations: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// question_type, su_class or su_subtype; repeatable. Defaults to all three.
    #[arg(long, value_parser = parse_field)]
    field: Vec<AnnotationField>,
}

#[derive(Args, Debug, Serialize)]
pub struct EventArgs {
    /// Verb list, one word per line; defaults to the bundled lexicon.
    #[arg(long)]
    verbs: Option<PathBuf>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    /// Also score these predictions on the subset.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

fn parse_field(s: &str) -> Result<AnnotationField, String> {
    AnnotationField::parse(s)
        .ok_or_else(|| format!("unknown field {s:?} (expected question_type, su_class or su_subtype)"))
}

pub fn analyze(ctx: &mut Ctx, cmd: AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Agreement(a) => agreement(ctx, a),
        AnalyzeCommand::Decompose(a) => decomposition(ctx, a),
        AnalyzeCommand::EventSubset(a) => event_subset(ctx, a),
    }
}

fn annotations(path: &std::path::Path) -> Result<AnnotationSet> {
    let set = load_annotations(path).with_context(|| format!("loading annotations {}", path.display()))?;
    for e in &set.row_errors {
        log::warn!("{}: line {}: {}", path.display(), e.line, e.message);
    }
    Ok(set)
}

fn agreement(ctx: &mut Ctx, a: AgreementArgs) -> Result<()> {
    let set = annotations(&a.annotations)?;
    let mut summary = ReportTable::new("agreement", &["simple_agreement", "fleiss_kappa"]);
    let mut tables = Vec::new();
    for field in AnnotationField::ALL {
        let simple = simple_agreement(&set.records, field)?;
        let kappa = match fleiss_kappa(&set.records, field) {
            Ok(k) => k,
            Err(e) => {
                log::warn!("{}: kappa {e}", field.as_str());
                f64::NAN
            }
        };
        summary.push(field.as_str(), vec![simple, kappa]);
        let counts = label_counts(&set.records, field);
        let mut t = ReportTable::new(format!("{} counts", field.as_str()), &["count"]);
        for l in field.labels() {
            t.push(l, vec![counts.get(l).copied().unwrap_or(0) as f64]);
        }
        tables.push(t);
    }
    tables.insert(0, summary);
    emit_report(&tables, &ctx.out.join("analysis"), "agreement")?;
    write_manifest(&ctx.out, "analyze agreement", serde_json::to_value(&a)?, &ctx.config)
}

fn decomposition(ctx: &mut Ctx, a: DecomposeArgs) -> Result<()> {
    let ds = load(ctx)?;
    let set = annotations(&a.annotations)?;
    let preds = load_predictions(&a.predictions)?;
    let ids: Vec<&str> = preds.iter().map(|p| p.question_id.as_str()).collect();
    let qs = scored_questions(&ds.qa_pairs, None, &ids);
    let report = evaluate_predictions(&preds, &qs)?;
    let fields = if a.field.is_empty() {
        AnnotationField::ALL.to_vec()
    } else {
        a.field.clone()
    };
    let mut tables = Vec::new();
    let mut unannotated = BTreeMap::new();
    for f in fields {
        let d = decompose(&report.examples, &set.records, f);
        unannotated.insert(f.as_str(), d.unannotated);
        tables.push(ReportTable::decomposition(format!("by {}", f.as_str()), &d));
    }
    for (f, n) in unannotated {
        if n > 0 {
            log::warn!("{n} scored questions have no {f} annotation");
        }
    }
    emit_report(&tables, &ctx.out.join("analysis"), "decomposition")?;
    write_manifest(&ctx.out, "analyze decompose", serde_json::to_value(&a)?, &ctx.config)
}

fn event_subset(ctx: &mut Ctx, a: EventArgs) -> Result<()> {
    let ds = load(ctx)?;
    let lexicon = match &a.verbs {
        Some(p) => std::sync::Arc::new(VerbLexicon::from_file(p)?),
        None => VerbLexicon::bundled(),
    };
    let pool: Vec<QaPair> = questions(&ds, a.split).into_iter().cloned().collect();
    let subset: Vec<QaPair> = event_answer_subset(&pool, &lexicon)?.into_iter().cloned().collect();
    let dir = ctx.out.join("analysis");
    let mut ids = String::new();
    for q in &subset {
        ids.push_str(&q.id);
        ids.push('\n');
    }
    write_text(&dir.join("event-questions.txt"), &ids)?;
    let mut t = ReportTable::new("event subset", &["questions", "subset", "share"]);
    let share = if pool.is_empty() {
        0.0
    } else {
        100.0 * subset.len() as f64 / pool.len() as f64
    };
    t.push("all", vec![pool.len() as f64, subset.len() as f64, share]);
    let mut tables = vec![t];
    if let Some(p) = &a.predictions {
        let preds = load_predictions(p)?;
        let keep: std::collections::HashSet<&str> = subset.iter().map(|q| q.id.as_str()).collect();
        let preds: Vec<_> = preds
            .into_iter()
            .filter(|p| keep.contains(p.question_id.as_str()))
            .collect();
        tables.push(ReportTable::metrics(
            "event subset metrics",
            &evaluate_predictions(&preds, &subset)?,
        ));
    }
    emit_report(&tables, &dir, "event-subset")?;
    write_manifest(
        &ctx.out,
        "analyze event-subset",
        json!({"verbs": a.verbs, "split": a.split, "predictions": a.predictions}),
        &ctx.config,
    )
}
