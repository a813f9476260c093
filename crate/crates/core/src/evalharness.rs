//! Answer coverage of ranked passages, scoring of prediction files and report
//! rendering.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId, Dataset, QaPair};
use crate::error::{Error, Result};
use crate::index::{AnswerMode, Bm25Index, QueryOptions, RankedList};
use crate::metrics::{bleu, em, f1, max_over_references, normalize_answer, rouge_l, ExampleScores, MetricReport};
use crate::spanlabel::best_span_any;
use crate::taxonomy::Decomposition;

/// Which reference answers count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum References {
    #[default]
    All,
    First,
}

impl References {
    pub fn select(self, qa: &QaPair) -> Vec<Vec<String>> {
        let all = qa.answer_terms();
        match self {
            References::All => all,
            References::First => all.into_iter().take(1).collect(),
        }
    }
}

/// The answer occurs as a contiguous run of normalized terms.
pub fn contains_answer(passage: &[String], answer: &[String]) -> bool {
    !answer.is_empty() && answer.len() <= passage.len() && passage.windows(answer.len()).any(|w| w == answer)
}

/// (EM indicator, best span Rouge-L) of a single passage against the references.
pub fn passage_coverage(passage: &[String], answers: &[Vec<String>]) -> (f64, f64) {
    let hit = answers.iter().any(|a| contains_answer(passage, a));
    (if hit { 1.0 } else { 0.0 }, best_span_any(passage, answers))
}

/// Coverage of the top `k` passages: maxima over passages and references.
pub fn coverage(book: &Book, ranked: &RankedList, answers: &[Vec<String>], k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::invalid("coverage depth k must be at least 1"));
    }
    if ranked.is_empty() {
        warn!("empty ranking for query {:?}", ranked.query);
        return Ok((0.0, 0.0));
    }
    Ok(ranked
        .top(k)
        .iter()
        .map(|e| passage_coverage(&book.passage_terms(e.passage), answers))
        .fold((0.0, 0.0), |a, b| (f64::max(a.0, b.0), f64::max(a.1, b.1))))
}

/// Per-k coverage rows; values are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub k: usize,
    pub em: f64,
    pub rouge_l: f64,
    pub questions: usize,
}

/// One ranked question ready for coverage.
pub struct CoverageItem<'a> {
    pub book: &'a Book,
    pub ranking: RankedList,
    pub answers: Vec<Vec<String>>,
}

/// Coverage at every requested depth from one pass over each ranking.
pub fn coverage_suite(items: &[CoverageItem<'_>], ks: &[usize]) -> Result<Vec<CoverageReport>> {
    if ks.contains(&0) {
        return Err(Error::invalid("coverage depth k must be at least 1"));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let per_question: Vec<Vec<(f64, f64)>> = items
        .par_iter()
        .map(|it| {
            if it.ranking.is_empty() {
                warn!("empty ranking for query {:?}", it.ranking.query);
            }
            let mut best = (0.0, 0.0);
            let mut prefix = Vec::with_capacity(max_k);
            for e in it.ranking.top(max_k) {
                let c = passage_coverage(&it.book.passage_terms(e.passage), &it.answers);
                best = (f64::max(best.0, c.0), f64::max(best.1, c.1));
                prefix.push(best);
            }
            prefix
        })
        .collect();
    let n = items.len();
    Ok(ks
        .iter()
        .map(|&k| {
            let (mut em_sum, mut rouge_sum) = (0.0, 0.0);
            for p in &per_question {
                if let Some(&(e, r)) = p.get(k - 1).or(p.last()) {
                    em_sum += e;
                    rouge_sum += r;
                }
            }
            let mean = |s: f64| if n == 0 { 0.0 } else { 100.0 * s / n as f64 };
            CoverageReport {
                k,
                em: mean(em_sum),
                rouge_l: mean(rouge_sum),
                questions: n,
            }
        })
        .collect())
}

/// How questions are turned into retrieval queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    #[default]
    Question,
    /// Question plus reference answer(s).
    Oracle(AnswerMode),
}

/// Retrieve `depth` passages for every question, in parallel.
pub fn rank_questions<'a>(
    dataset: &'a Dataset,
    indexes: &HashMap<BookId, Bm25Index>,
    questions: &[&QaPair],
    depth: usize,
    mode: RetrievalMode,
    opts: QueryOptions,
    references: References,
) -> Result<Vec<CoverageItem<'a>>> {
    questions
        .par_iter()
        .map(|qa| {
            let book = dataset
                .book(&qa.book_id)
                .ok_or_else(|| Error::invalid(format!("question {}: book {} not loaded", qa.id, qa.book_id)))?;
            let index = indexes
                .get(&qa.book_id)
                .ok_or_else(|| Error::invalid(format!("question {}: no index for book {}", qa.id, qa.book_id)))?;
            let ranking = match mode {
                RetrievalMode::Question => index.retrieve(&qa.question, depth, opts)?,
                RetrievalMode::Oracle(am) => index.oracle_retrieve(&qa.question, &qa.answers, depth, am, opts)?,
            };
            Ok(CoverageItem {
                book,
                ranking,
                answers: references.select(qa),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub answer: String,
}

/// One JSON object per line with `question_id` and `answer`.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row: i as u64 + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn score_answer(prediction: &str, references: &[String]) -> (f64, f64, f64, f64, f64) {
    let cand = normalize_answer(prediction);
    let refs: Vec<Vec<String>> = references.iter().map(|r| normalize_answer(r)).collect();
    (
        max_over_references(&cand, &refs, rouge_l),
        bleu(&cand, &refs, 1),
        bleu(&cand, &refs, 4),
        max_over_references(&cand, &refs, em),
        max_over_references(&cand, &refs, f1),
    )
}

/// Score predictions against every question in `qa_pairs` (in that order).
/// Questions without a prediction score zero and are flagged.
pub fn evaluate_predictions(predictions: &[Prediction], qa_pairs: &[QaPair]) -> Result<MetricReport> {
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        if by_id.insert(&p.question_id, &p.answer).is_some() {
            return Err(Error::Duplicate(format!("prediction for question {}", p.question_id)));
        }
    }
    let known: HashSet<&str> = qa_pairs.iter().map(|q| q.id.as_str()).collect();
    if let Some(p) = predictions.iter().find(|p| !known.contains(p.question_id.as_str())) {
        return Err(Error::invalid(format!(
            "prediction for unknown question {}",
            p.question_id
        )));
    }
    let examples = qa_pairs
        .par_iter()
        .map(|qa| match by_id.get(qa.id.as_str()) {
            Some(answer) => {
                let (rouge_l, bleu1, bleu4, em, f1) = score_answer(answer, &qa.answer_texts);
                ExampleScores {
                    question_id: qa.id.clone(),
                    rouge_l,
                    bleu1,
                    bleu4,
                    em,
                    f1,
                    missing: false,
                }
            }
            None => ExampleScores {
                question_id: qa.id.clone(),
                rouge_l: 0.0,
                bleu1: 0.0,
                bleu4: 0.0,
                em: 0.0,
                f1: 0.0,
                missing: true,
            },
        })
        .collect();
    Ok(MetricReport::from_examples(examples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// A named table of numbers; rendered both aligned for reading and as JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        ReportTable {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(ReportRow {
            label: label.into(),
            values,
        });
    }

    pub fn coverage(name: impl Into<String>, reports: &[CoverageReport]) -> Self {
        let mut t = ReportTable::new(name, &["em", "rouge_l", "questions"]);
        for r in reports {
            t.push(format!("top-{}", r.k), vec![r.em, r.rouge_l, r.questions as f64]);
        }
        t
    }

    /// Means in percent, plus counts.
    pub fn metrics(name: impl Into<String>, report: &MetricReport) -> Self {
        let mut t = ReportTable::new(name, &["rouge_l", "bleu1", "bleu4", "em", "f1", "questions", "missing"]);
        let m = report.means;
        t.push(
            "mean",
            vec![
                100.0 * m.rouge_l,
                100.0 * m.bleu1,
                100.0 * m.bleu4,
                100.0 * m.em,
                100.0 * m.f1,
                report.count as f64,
                report.missing as f64,
            ],
        );
        t
    }

    pub fn decomposition(name: impl Into<String>, d: &Decomposition) -> Self {
        let mut t = ReportTable::new(name, &["ratio", "count", "rouge_l", "bleu1", "bleu4", "em", "f1"]);
        for r in &d.rows {
            let m = r.means;
            t.push(
                r.label.clone(),
                vec![
                    r.ratio,
                    r.count as f64,
                    100.0 * m.rouge_l,
                    100.0 * m.bleu1,
                    100.0 * m.bleu4,
                    100.0 * m.em,
                    100.0 * m.f1,
                ],
            );
        }
        t
    }
}

fn cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Aligned plain-text tables, numbers to two decimals (integers as integers).
pub fn render_table(tables: &[ReportTable]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "## {}", t.name);
        let label_w = t.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
        let cells: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| r.values.iter().map(|&v| cell(v)).collect())
            .collect();
        let widths: Vec<usize> = t
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| cells.iter().map(|r| r[j].len()).chain([c.len()]).max().unwrap_or(0))
            .collect();
        let _ = write!(out, "{:<label_w$}", "label");
        for (c, w) in t.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (r, row) in t.rows.iter().zip(&cells) {
            let _ = write!(out, "{:<label_w$}", r.label);
            for (c, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    table: &'a str,
    label: &'a str,
    columns: &'a [String],
    values: &'a [f64],
}

/// One JSON object per row.
pub fn render_jsonl(tables: &[ReportTable]) -> String {
    let mut out = String::new();
    for t in tables {
        for r in &t.rows {
            let row = JsonRow {
                table: &t.name,
                label: &r.label,
                columns: &t.columns,
                values: &r.values,
            };
            out.push_str(&serde_json::to_string(&row).expect("row serializes"));
            out.push('\n');
        }
    }
    out
}

/// Write `<stem>.txt` (aligned) and `<stem>.jsonl` next to each other.
pub fn emit_report(tables: &[ReportTable], dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let txt = dir.join(format!("{stem}.txt"));
    std::fs::write(&txt, render_table(tables)).map_err(|e| Error::io(&txt, e))?;
    let jsonl = dir.join(format!("{stem}.jsonl"));
    std::fs::write(&jsonl, render_jsonl(tables)).map_err(|e| Error::io(&jsonl, e))
}
