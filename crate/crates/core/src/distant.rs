//! Distant-supervision passage labels: passages retrieved both by the
//! question and by question+answer become positives, the rest of the two
//! candidate lists supplies negatives, and Rouge-L thresholds refine both.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId, Dataset, QaPair};
use crate::error::{Error, Result};
use crate::index::{AnswerMode, Bm25Index, QueryOptions, RankedList};
use crate::seed::item_rng;
use crate::spanlabel::best_span_any;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativePool {
    /// (C_Q ∪ C_QA) minus the intersection.
    #[default]
    Union,
    /// C_Q minus the intersection.
    QuestionOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DsConfig {
    pub k_q: usize,
    pub k_qa: usize,
    /// Target ratio |positives| / |negatives|.
    pub sigma: f64,
    /// Positives are kept when their span score is strictly above alpha.
    pub alpha: f64,
    /// Negatives are kept when their span score is strictly below beta.
    pub beta: f64,
    pub seed: u64,
    pub negative_pool: NegativePool,
    pub answer_mode: AnswerMode,
    pub query: QueryOptions,
}

impl Default for DsConfig {
    fn default() -> Self {
        DsConfig {
            k_q: 32,
            k_qa: 32,
            sigma: 1.0,
            alpha: 0.5,
            beta: 0.2,
            seed: 0,
            negative_pool: NegativePool::Union,
            answer_mode: AnswerMode::First,
            query: QueryOptions::default(),
        }
    }
}

impl DsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_q == 0 || self.k_qa == 0 {
            return Err(Error::invalid("retrieval depths must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(0.0 <= self.beta && self.beta <= self.alpha && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "thresholds must satisfy 0 <= beta <= alpha <= 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Question-only and question+answer candidate lists.
pub fn ds_candidates(index: &Bm25Index, qa: &QaPair, cfg: &DsConfig) -> Result<(RankedList, RankedList)> {
    let c_q = index.retrieve(&qa.question, cfg.k_q, cfg.query)?;
    let c_qa = index.oracle_retrieve(&qa.question, &qa.answers, cfg.k_qa, cfg.answer_mode, cfg.query)?;
    Ok((c_q, c_qa))
}

/// Passages in both lists, in C_Q rank order.
pub fn intersection(c_q: &RankedList, c_qa: &RankedList) -> Vec<usize> {
    let qa: HashSet<usize> = c_qa.passages().collect();
    c_q.passages().filter(|p| qa.contains(p)).collect()
}

/// Negative pool in C_Q rank order, then C_QA rank order.
pub fn negative_pool(c_q: &RankedList, c_qa: &RankedList, pool: NegativePool) -> Vec<usize> {
    let inter: HashSet<usize> = intersection(c_q, c_qa).into_iter().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let extra = match pool {
        NegativePool::Union => Some(c_qa.passages()),
        NegativePool::QuestionOnly => None,
    };
    for p in c_q.passages().chain(extra.into_iter().flatten()) {
        if !inter.contains(&p) && seen.insert(p) {
            out.push(p);
        }
    }
    out
}

/// Sample sizes (positives, negatives) for an intersection of `n_inter`
/// passages and a pool of `n_pool`. All positives are taken and
/// round(p / σ) negatives requested; when the pool is too small the positives
/// shrink to keep the ratio, but never below one.
pub fn sample_sizes(n_inter: usize, n_pool: usize, sigma: f64) -> (usize, usize) {
    if n_inter == 0 {
        return (0, 0);
    }
    if n_pool == 0 {
        return (n_inter, 0);
    }
    let n = (n_inter as f64 / sigma).round() as usize;
    if n <= n_pool {
        return (n_inter, n);
    }
    let p = ((sigma * n_pool as f64).round() as usize).clamp(1, n_inter);
    (p, n_pool)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsSample {
    pub intersection: Vec<usize>,
    /// Sorted by passage index.
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

/// Seeded sampling of positives from the intersection and negatives from the
/// pool. The RNG depends only on the seed and the question id.
pub fn ds_sample(question_id: &str, c_q: &RankedList, c_qa: &RankedList, cfg: &DsConfig) -> DsSample {
    let inter = intersection(c_q, c_qa);
    let pool = negative_pool(c_q, c_qa, cfg.negative_pool);
    let (np, nn) = sample_sizes(inter.len(), pool.len(), cfg.sigma);
    let mut rng = item_rng(cfg.seed, &[question_id.as_bytes()]);
    let mut positives: Vec<usize> = sample(&mut rng, inter.len(), np)
        .into_iter()
        .map(|i| inter[i])
        .collect();
    let mut negatives: Vec<usize> = sample(&mut rng, pool.len(), nn).into_iter().map(|i| pool[i]).collect();
    positives.sort_unstable();
    negatives.sort_unstable();
    DsSample {
        intersection: inter,
        positives,
        negatives,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage: usize,
    /// Best span Rouge-L against the answers; 0 when the passage is shorter
    /// than every answer.
    pub score: f64,
    /// Survives the Rouge-L filter.
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsLabels {
    pub question_id: String,
    pub book_id: BookId,
    pub intersection_size: usize,
    pub positives: Vec<ScoredPassage>,
    pub negatives: Vec<ScoredPassage>,
}

impl DsLabels {
    /// No positive candidates; the question contributes no labels.
    pub fn dropped(&self) -> bool {
        self.intersection_size == 0
    }

    pub fn filtered_positives(&self) -> Vec<usize> {
        self.positives.iter().filter(|s| s.kept).map(|s| s.passage).collect()
    }

    pub fn filtered_negatives(&self) -> Vec<usize> {
        self.negatives.iter().filter(|s| s.kept).map(|s| s.passage).collect()
    }

    pub fn records(&self) -> Vec<DsRecord> {
        let rows = |v: &[ScoredPassage], label| {
            v.iter()
                .map(|s| DsRecord {
                    question_id: self.question_id.clone(),
                    book_id: self.book_id.clone(),
                    passage: s.passage,
                    label,
                    score: s.score,
                    kept: s.kept,
                })
                .collect::<Vec<_>>()
        };
        let mut out = rows(&self.positives, DsLabel::Pos);
        out.extend(rows(&self.negatives, DsLabel::Neg));
        out
    }
}

/// Span scores for the sampled sets and their filter outcome.
pub fn rouge_filter(
    book: &Book,
    positives: &[usize],
    negatives: &[usize],
    answers: &[Vec<String>],
    cfg: &DsConfig,
) -> (Vec<ScoredPassage>, Vec<ScoredPassage>) {
    let score = |p: usize| best_span_any(&book.passage_terms(p), answers);
    let pos = positives
        .iter()
        .map(|&p| {
            let s = score(p);
            ScoredPassage {
                passage: p,
                score: s,
                kept: s > cfg.alpha,
            }
        })
        .collect();
    let neg = negatives
        .iter()
        .map(|&p| {
            let s = score(p);
            ScoredPassage {
                passage: p,
                score: s,
                kept: s < cfg.beta,
            }
        })
        .collect();
    (pos, neg)
}

pub fn ds_labels(book: &Book, index: &Bm25Index, qa: &QaPair, cfg: &DsConfig) -> Result<DsLabels> {
    let (c_q, c_qa) = ds_candidates(index, qa, cfg)?;
    let s = ds_sample(&qa.id, &c_q, &c_qa, cfg);
    let (positives, negatives) = rouge_filter(book, &s.positives, &s.negatives, &qa.answer_terms(), cfg);
    Ok(DsLabels {
        question_id: qa.id.clone(),
        book_id: qa.book_id.clone(),
        intersection_size: s.intersection.len(),
        positives,
        negatives,
    })
}

/// Labels for every question, in input order. Questions are processed in
/// parallel; output does not depend on the thread count.
pub fn ds_labels_all(
    dataset: &Dataset,
    indexes: &HashMap<BookId, Bm25Index>,
    questions: &[&QaPair],
    cfg: &DsConfig,
) -> Result<Vec<DsLabels>> {
    cfg.validate()?;
    questions
        .par_iter()
        .map(|qa| {
            let book = dataset
                .book(&qa.book_id)
                .ok_or_else(|| Error::invalid(format!("question {}: book {} not loaded", qa.id, qa.book_id)))?;
            let index = indexes
                .get(&qa.book_id)
                .ok_or_else(|| Error::invalid(format!("question {}: no index for book {}", qa.id, qa.book_id)))?;
            ds_labels(book, index, qa, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsLabel {
    Pos,
    Neg,
}

impl DsLabel {
    fn as_str(self) -> &'static str {
        match self {
            DsLabel::Pos => "pos",
            DsLabel::Neg => "neg",
        }
    }
}

/// One exported row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsRecord {
    pub question_id: String,
    pub book_id: BookId,
    pub passage: usize,
    pub label: DsLabel,
    pub score: f64,
    pub kept: bool,
}

pub const DS_HEADER: &str = "# question_id\tbook_id\tpassage\tlabel\tscore\tkept";

/// Tab-separated rows after a one-line header comment, in label order.
pub fn format_ds(labels: &[DsLabels]) -> String {
    let mut out = String::new();
    out.push_str(DS_HEADER);
    out.push('\n');
    for r in labels.iter().flat_map(DsLabels::records) {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.question_id,
            r.book_id,
            r.passage,
            r.label.as_str(),
            r.score,
            u8::from(r.kept)
        );
    }
    out
}

pub fn export_ds(labels: &[DsLabels], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_ds(labels).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn load_ds(path: &Path) -> Result<Vec<DsRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row: i as u64 + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", cols.len())));
        }
        let label = match cols[3] {
            "pos" => DsLabel::Pos,
            "neg" => DsLabel::Neg,
            other => return Err(bad(format!("unknown label {other:?}"))),
        };
        let kept = match cols[5] {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("kept flag must be 0 or 1, got {other:?}"))),
        };
        out.push(DsRecord {
            question_id: cols[0].to_string(),
            book_id: BookId::from(cols[1]),
            passage: cols[2].parse().map_err(|e| bad(format!("passage: {e}")))?,
            label,
            score: cols[4].parse().map_err(|e| bad(format!("score: {e}")))?,
            kept,
        });
    }
    Ok(out)
}
