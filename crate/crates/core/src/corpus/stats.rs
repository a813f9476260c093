use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::{Book, BookId};
use crate::error::{Error, Result};

/// Word counts for one book. Keys are lowercased terms; punctuation is excluded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BookStats {
    pub word_counts: HashMap<String, u64>,
    pub token_total: u64,
    pub passage_count: usize,
    /// Number of passages of this book containing each term.
    pub passage_df: HashMap<String, u32>,
}

impl BookStats {
    pub fn from_book(book: &Book) -> Self {
        let mut stats = BookStats {
            passage_count: book.passages.len(),
            ..Default::default()
        };
        for i in 0..book.passages.len() {
            let mut seen: HashSet<String> = HashSet::new();
            for tok in book.passage_tokens(i).iter().filter(|t| !t.is_punct) {
                let term = tok.term();
                stats.token_total += 1;
                *stats.word_counts.entry(term.clone()).or_insert(0) += 1;
                seen.insert(term);
            }
            for term in seen {
                *stats.passage_df.entry(term).or_insert(0) += 1;
            }
        }
        stats
    }

    pub fn count(&self, term: &str) -> u64 {
        self.word_counts.get(term).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    books: HashMap<BookId, BookStats>,
    global_counts: HashMap<String, u64>,
    token_total: u64,
    stopword_terms: HashSet<String>,
}

impl CorpusStats {
    pub fn book(&self, id: &BookId) -> Option<&BookStats> {
        self.books.get(id)
    }

    pub fn book_ids(&self) -> impl Iterator<Item = &BookId> {
        self.books.keys()
    }

    /// Global count n(w).
    pub fn count(&self, term: &str) -> u64 {
        self.global_counts.get(term).copied().unwrap_or(0)
    }

    /// Per-book count n(w, b).
    pub fn book_count(&self, term: &str, book: &BookId) -> u64 {
        self.books.get(book).map_or(0, |b| b.count(term))
    }

    pub fn token_total(&self) -> u64 {
        self.token_total
    }

    pub fn global_counts(&self) -> &HashMap<String, u64> {
        &self.global_counts
    }

    /// Whether the term was flagged as a stopword when tokenized.
    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopword_terms.contains(term)
    }
}

pub fn build_corpus_stats(books: &[Book]) -> Result<CorpusStats> {
    if books.is_empty() {
        return Err(Error::invalid("corpus statistics need at least one book"));
    }
    let per_book: Vec<BookStats> = books.par_iter().map(BookStats::from_book).collect();

    let mut stats = CorpusStats::default();
    for book in books {
        for t in book.tokens.iter().filter(|t| t.is_stopword && !t.is_punct) {
            stats.stopword_terms.insert(t.term());
        }
    }
    for (book, bs) in books.iter().zip(per_book) {
        stats.token_total += bs.token_total;
        for (w, &n) in &bs.word_counts {
            *stats.global_counts.entry(w.clone()).or_insert(0) += n;
        }
        stats.books.insert(book.id.clone(), bs);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BookKind;

    fn book(id: &str, text: &str) -> Book {
        Book::from_text(id, BookKind::Book, text, 4)
    }

    #[test]
    fn single_book_identity() {
        let b = book("a", "alpha beta gamma delta epsilon zeta eta theta iota kappa");
        let stats = build_corpus_stats(std::slice::from_ref(&b)).unwrap();
        let bs = stats.book(&b.id).unwrap();
        assert_eq!(bs.word_counts.len(), 10);
        assert_eq!(&bs.word_counts, stats.global_counts());
        assert_eq!(stats.token_total(), 10);
    }

    #[test]
    fn disjoint_books() {
        let a = book("a", "red green blue");
        let b = book("b", "cat dog");
        let stats = build_corpus_stats(&[a.clone(), b.clone()]).unwrap();
        for w in ["red", "green", "blue"] {
            assert_eq!(stats.count(w), stats.book_count(w, &a.id));
        }
        for w in ["cat", "dog"] {
            assert_eq!(stats.count(w), stats.book_count(w, &b.id));
        }
    }

    #[test]
    fn punctuation_excluded_stopwords_kept() {
        let a = book("a", "The cat, the hat!");
        let stats = build_corpus_stats(&[a]).unwrap();
        assert_eq!(stats.token_total(), 4);
        assert_eq!(stats.count("the"), 2);
        assert_eq!(stats.count(","), 0);
        assert!(stats.is_stopword("the"));
        assert!(!stats.is_stopword("cat"));
    }

    #[test]
    fn passage_document_frequency() {
        // chunk size 4: [a b a c] [b b d e] [f]
        let a = book("x", "a1 b1 a1 c1 b1 b1 d1 e1 f1");
        let stats = build_corpus_stats(std::slice::from_ref(&a)).unwrap();
        let bs = stats.book(&a.id).unwrap();
        assert_eq!(bs.passage_count, 3);
        assert_eq!(bs.passage_df["a1"], 1);
        assert_eq!(bs.passage_df["b1"], 2);
        assert_eq!(bs.passage_df["f1"], 1);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(build_corpus_stats(&[]).is_err());
    }
}
