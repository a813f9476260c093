use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RankedList;
use crate::corpus::{join_tokens, Book, BookId, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub passage: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOptions {
    /// Drop stopword tokens from the query before scoring.
    pub drop_stopwords: bool,
}

/// Which reference answers are appended to the question for oracle retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerMode {
    #[default]
    First,
    All,
}

/// Inverted index over one book's passages. Terms are lowercased and
/// punctuation is not indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    pub(crate) book_id: BookId,
    pub(crate) params: Bm25Params,
    pub(crate) postings: BTreeMap<String, Vec<Posting>>,
    pub(crate) passage_lengths: Vec<u32>,
    pub(crate) avg_len: f64,
}

pub fn build_index(book: &Book, params: Bm25Params) -> Result<Bm25Index> {
    if book.passages.is_empty() {
        return Err(Error::EmptyBook(book.id.to_string()));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut lengths = Vec::with_capacity(book.passages.len());
    for (i, _) in book.passages.iter().enumerate() {
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        let mut len = 0u32;
        for tok in book.passage_tokens(i).iter().filter(|t| !t.is_punct) {
            *tf.entry(tok.term()).or_insert(0) += 1;
            len += 1;
        }
        for (term, n) in tf {
            postings.entry(term).or_default().push(Posting {
                passage: i as u32,
                tf: n,
            });
        }
        lengths.push(len);
    }
    Ok(Bm25Index::from_parts(book.id.clone(), params, postings, lengths))
}

impl Bm25Index {
    pub(crate) fn from_parts(
        book_id: BookId,
        params: Bm25Params,
        postings: BTreeMap<String, Vec<Posting>>,
        passage_lengths: Vec<u32>,
    ) -> Self {
        let total: u64 = passage_lengths.iter().map(|&l| l as u64).sum();
        let avg_len = if total == 0 {
            1.0
        } else {
            total as f64 / passage_lengths.len() as f64
        };
        Bm25Index {
            book_id,
            params,
            postings,
            passage_lengths,
            avg_len,
        }
    }

    pub fn book_id(&self) -> &BookId {
        &self.book_id
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn passage_count(&self) -> usize {
        self.passage_lengths.len()
    }

    pub fn passage_length(&self, passage: usize) -> u32 {
        self.passage_lengths[passage]
    }

    pub fn average_length(&self) -> f64 {
        self.avg_len
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Number of passages containing `term`.
    pub fn df(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// ln(1 + (N − df + 0.5) / (df + 0.5)); never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.passage_count() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, tf: u32, passage_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = 1.0 - b + b * passage_len as f64 / self.avg_len;
        tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// Distinct lowercased query terms in sorted order. Query-side term
    /// frequency is ignored.
    pub fn query_terms(tokens: &[Token], opts: QueryOptions) -> Vec<String> {
        let mut terms: Vec<String> = tokens
            .iter()
            .filter(|t| !t.is_punct && !(opts.drop_stopwords && t.is_stopword))
            .map(Token::term)
            .collect();
        terms.sort_unstable();
        terms.dedup();
        terms
    }

    /// BM25 score of every passage for the given distinct terms.
    pub fn score_all(&self, terms: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.passage_count()];
        for term in terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(term);
            for p in postings {
                let len = self.passage_lengths[p.passage as usize];
                scores[p.passage as usize] += idf * self.term_weight(p.tf, len);
            }
        }
        scores
    }

    /// Top-`k` passages for the query. An empty query (after filtering) yields
    /// an empty list.
    pub fn retrieve(&self, query: &[Token], k: usize, opts: QueryOptions) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::invalid("retrieval depth k must be at least 1"));
        }
        let terms = Self::query_terms(query, opts);
        let desc = join_tokens(query);
        if terms.is_empty() {
            return Ok(RankedList::empty(self.book_id.clone(), desc));
        }
        let scores = self.score_all(&terms);
        Ok(RankedList::from_scores(self.book_id.clone(), desc, &scores, k))
    }

    /// Retrieval with the question concatenated with its reference answer(s).
    pub fn oracle_retrieve(
        &self,
        question: &[Token],
        answers: &[Vec<Token>],
        k: usize,
        mode: AnswerMode,
        opts: QueryOptions,
    ) -> Result<RankedList> {
        let mut query = question.to_vec();
        match mode {
            AnswerMode::First => query.extend(answers.first().into_iter().flatten().cloned()),
            AnswerMode::All => query.extend(answers.iter().flatten().cloned()),
        }
        self.retrieve(&query, k, opts)
    }
}
