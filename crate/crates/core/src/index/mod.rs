//! Per-book lexical retrieval: an Okapi BM25 inverted index over passages and
//! TF-IDF cosine similarity between passages.

mod bm25;
mod codec;
mod tfidf;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId};
use crate::error::Result;

pub use bm25::{build_index, AnswerMode, Bm25Index, Bm25Params, Posting, QueryOptions};
pub use codec::{read_index, write_index, INDEX_MAGIC, INDEX_VERSION};
pub use tfidf::{tfidf_similarity, PassageVectors, TfIdfModel};

/// Build one index per book, in parallel.
pub fn build_indexes(books: &[Book], params: Bm25Params) -> Result<HashMap<BookId, Bm25Index>> {
    books
        .par_iter()
        .map(|b| build_index(b, params).map(|i| (b.id.clone(), i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub passage: usize,
    pub score: f64,
}

/// Passages of one book ordered by non-increasing score, ties by passage index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub book_id: BookId,
    pub query: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn empty(book_id: BookId, query: impl Into<String>) -> Self {
        RankedList {
            book_id,
            query: query.into(),
            entries: Vec::new(),
        }
    }

    /// Take the best `k` of `scores` (indexed by passage).
    pub fn from_scores(book_id: BookId, query: impl Into<String>, scores: &[f64], k: usize) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let by_rank = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        if k < order.len() {
            order.select_nth_unstable_by(k, by_rank);
            order.truncate(k);
        }
        order.sort_unstable_by(by_rank);
        RankedList {
            book_id,
            query: query.into(),
            entries: order
                .into_iter()
                .map(|p| RankedEntry {
                    passage: p,
                    score: scores[p],
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn passages(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.passage)
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList {
            book_id: self.book_id.clone(),
            query: self.query.clone(),
            entries: self.top(k).to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_scores_orders_and_clamps() {
        let scores = [0.5, 2.0, 0.5, 1.0];
        let r = RankedList::from_scores(BookId::from("b"), "q", &scores, 10);
        assert_eq!(r.passages().collect::<Vec<_>>(), [1, 3, 0, 2]);
        let r2 = RankedList::from_scores(BookId::from("b"), "q", &scores, 3);
        assert_eq!(r2.passages().collect::<Vec<_>>(), [1, 3, 0]);
    }
}
