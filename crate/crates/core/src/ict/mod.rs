//! Inverse-cloze training data. In every passage the sentence most predictive
//! of its book (summed word-book PMI) becomes a pseudo-question; the passage
//! without it is the positive and the most TF-IDF-similar other passages of
//! the same book are the negatives.

mod sentences;

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId, BookKind, CorpusStats, Token};
use crate::error::{Error, Result};
use crate::index::{PassageVectors, TfIdfModel};

pub use sentences::{split_sentences, uppercase_ratio};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IctConfig {
    pub max_negatives: usize,
    /// Minimum number of non-stopword words in a pseudo-question.
    pub min_content_words: usize,
    /// Movie-script sentences at or above this uppercase share are stage
    /// directions and never selected.
    pub instructive_threshold: f64,
}

impl Default for IctConfig {
    fn default() -> Self {
        IctConfig {
            max_negatives: 500,
            min_content_words: 3,
            instructive_threshold: 0.8,
        }
    }
}

/// ln((n(w,b)/T_b) / (n(w)/T)) for a lowercased word. Words missing from the
/// book give negative infinity.
pub fn pmi(word: &str, book: &BookId, stats: &CorpusStats) -> Result<f64> {
    let global = stats.count(word);
    if global == 0 {
        return Err(Error::UnknownWord(word.to_string()));
    }
    let bs = stats
        .book(book)
        .ok_or_else(|| Error::invalid(format!("no statistics for book {book}")))?;
    let local = bs.count(word);
    if local == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let p_book = local as f64 / bs.token_total as f64;
    let p_all = global as f64 / stats.token_total() as f64;
    Ok((p_book / p_all).ln())
}

/// Sum of PMI over the content words of a sentence. A sentence without
/// content words, or with a word unknown to the corpus, gives negative infinity.
pub fn sentence_affinity(sentence: &[Token], book: &BookId, stats: &CorpusStats) -> f64 {
    let mut sum = 0.0;
    let mut any = false;
    for t in sentence.iter().filter(|t| t.is_content()) {
        match pmi(&t.term(), book, stats) {
            Ok(v) => sum += v,
            Err(_) => return f64::NEG_INFINITY,
        }
        any = true;
    }
    if any {
        sum
    } else {
        f64::NEG_INFINITY
    }
}

/// Selected sentence, as a token range relative to the passage start.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoQuestion {
    pub range: Range<usize>,
    pub affinity: f64,
}

pub fn is_eligible(sentence: &[Token], kind: BookKind, cfg: &IctConfig) -> bool {
    let content = sentence.iter().filter(|t| t.is_content()).count();
    if content < cfg.min_content_words {
        return false;
    }
    !(kind == BookKind::MovieScript && uppercase_ratio(sentence) >= cfg.instructive_threshold)
}

/// Highest-affinity eligible sentence of a passage; ties go to the earliest.
pub fn select_pseudo_question(
    book: &Book,
    passage: usize,
    stats: &CorpusStats,
    cfg: &IctConfig,
) -> Option<PseudoQuestion> {
    let tokens = book.passage_tokens(passage);
    let mut best: Option<PseudoQuestion> = None;
    for r in split_sentences(tokens) {
        let s = &tokens[r.clone()];
        if !is_eligible(s, book.kind, cfg) {
            continue;
        }
        let affinity = sentence_affinity(s, &book.id, stats);
        if affinity == f64::NEG_INFINITY {
            continue;
        }
        if best.as_ref().is_none_or(|b| affinity > b.affinity) {
            best = Some(PseudoQuestion { range: r, affinity });
        }
    }
    best
}

fn find(haystack: &[&str], needle: &[&str]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Passage tokens with the pseudo-question removed, repeating the removal
/// until no contiguous copy of it remains.
pub fn remove_sentence<'a>(passage: &[&'a str], range: Range<usize>) -> Vec<&'a str> {
    let question = &passage[range.clone()];
    let mut rest: Vec<&str> = passage[..range.start]
        .iter()
        .chain(&passage[range.end..])
        .copied()
        .collect();
    while let Some(at) = find(&rest, question) {
        rest.drain(at..at + question.len());
    }
    rest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IctExample {
    pub book_id: BookId,
    pub passage: usize,
    /// Book token offsets of the pseudo-question.
    pub question_start: usize,
    pub question_end: usize,
    pub affinity: f64,
    pub question: Vec<String>,
    pub positive: Vec<String>,
    /// Other passages of the book, most TF-IDF-similar to the question first.
    pub negatives: Vec<usize>,
}

/// Passages other than `source`, by similarity descending then index, at most `limit`.
pub fn rank_negatives(similarities: &[f64], source: usize, limit: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..similarities.len()).filter(|&i| i != source).collect();
    order.sort_by(|&a, &b| similarities[b].total_cmp(&similarities[a]).then(a.cmp(&b)));
    order.truncate(limit);
    order
}

/// One example per passage that has an eligible pseudo-question.
pub fn ict_examples(book: &Book, stats: &CorpusStats, cfg: &IctConfig) -> Result<Vec<IctExample>> {
    if book.passages.len() < 2 {
        return Err(Error::invalid(format!(
            "book {} needs at least 2 passages for negatives, has {}",
            book.id,
            book.passages.len()
        )));
    }
    let terms = book.all_passage_terms();
    let vectors = PassageVectors::new(TfIdfModel::from_passages(&terms), &terms);
    let limit = cfg.max_negatives.min(book.passages.len() - 1);
    let mut out = Vec::new();
    for i in 0..book.passages.len() {
        let Some(pq) = select_pseudo_question(book, i, stats, cfg) else {
            continue;
        };
        let tokens = book.passage_tokens(i);
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let question = &tokens[pq.range.clone()];
        let q_terms: Vec<String> = question.iter().filter(|t| !t.is_punct).map(Token::term).collect();
        let sims = vectors.similarities(&q_terms);
        let start = book.passages[i].start;
        out.push(IctExample {
            book_id: book.id.clone(),
            passage: i,
            question_start: start + pq.range.start,
            question_end: start + pq.range.end,
            affinity: pq.affinity,
            question: surfaces[pq.range.clone()].iter().map(|s| s.to_string()).collect(),
            positive: remove_sentence(&surfaces, pq.range)
                .into_iter()
                .map(str::to_string)
                .collect(),
            negatives: rank_negatives(&sims, i, limit),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IctReport {
    pub books: usize,
    pub passages: usize,
    pub examples: usize,
    /// Books with fewer than two passages.
    pub skipped_books: usize,
    pub books_without_examples: usize,
}

/// Examples for every book, in book order, generated in parallel.
pub fn ict_all(books: &[Book], stats: &CorpusStats, cfg: &IctConfig) -> Result<(Vec<IctExample>, IctReport)> {
    let per_book: Vec<Option<Vec<IctExample>>> = books
        .par_iter()
        .map(|b| {
            if b.passages.len() < 2 {
                Ok(None)
            } else {
                ict_examples(b, stats, cfg).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let mut report = IctReport {
        books: books.len(),
        passages: books.iter().map(|b| b.passages.len()).sum(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for ex in per_book {
        match ex {
            None => report.skipped_books += 1,
            Some(v) if v.is_empty() => report.books_without_examples += 1,
            Some(v) => examples.extend(v),
        }
    }
    report.examples = examples.len();
    Ok((examples, report))
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn ict_softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::invalid("softmax over an empty candidate set"));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// P(positive | question) against the example's negatives, with TF-IDF cosine
/// as the retrieval score.
pub fn lexical_ict_probability(example: &IctExample, book: &Book) -> Result<f64> {
    let terms = book.all_passage_terms();
    let model = TfIdfModel::from_passages(&terms);
    let norm = |s: &[String]| -> Vec<String> {
        s.iter()
            .filter(|w| w.chars().any(char::is_alphanumeric))
            .map(|w| w.to_lowercase())
            .collect()
    };
    let q = norm(&example.question);
    let mut scores = vec![crate::index::tfidf_similarity(&q, &norm(&example.positive), &model)];
    for &n in &example.negatives {
        scores.push(crate::index::tfidf_similarity(&q, &terms[n], &model));
    }
    Ok(ict_softmax(&scores)?[0])
}

pub fn export_ict(examples: &[IctExample], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for ex in examples {
        let line = serde_json::to_string(ex).expect("example serializes");
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}
