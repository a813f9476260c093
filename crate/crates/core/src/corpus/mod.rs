//! Dataset ingestion, tokenization, fixed-size passage chunking and corpus
//! word statistics.

mod chunk;
mod dataset;
mod stats;
mod tokenize;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use chunk::{chunk_book, DEFAULT_CHUNK_SIZE};
pub use dataset::{load_dataset, BookLoadError, Dataset, LoadOptions};
pub use stats::{build_corpus_stats, BookStats, CorpusStats};
pub use tokenize::{join_tokens, normalized_terms, tokenize, Stopwords, Token, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BookId(pub String);

impl BookId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BookId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BookId {
    fn from(s: &str) -> Self {
        BookId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BookKind {
    Book,
    MovieScript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Option<Split> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "valid" | "validation" | "dev" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// A contiguous chunk of a book's token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Passage {
    pub book_id: BookId,
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl Passage {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Book {
    pub id: BookId,
    pub kind: BookKind,
    pub tokens: Vec<Token>,
    pub passages: Vec<Passage>,
}

impl Book {
    pub fn from_tokens(id: BookId, kind: BookKind, tokens: Vec<Token>, chunk_size: usize) -> Self {
        let passages = chunk_book(&id, tokens.len(), chunk_size);
        Book {
            id,
            kind,
            tokens,
            passages,
        }
    }

    pub fn from_text(id: impl Into<String>, kind: BookKind, text: &str, chunk_size: usize) -> Self {
        Self::from_tokens(BookId(id.into()), kind, tokenize(text), chunk_size)
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn passage_tokens(&self, index: usize) -> &[Token] {
        &self.tokens[self.passages[index].range()]
    }

    /// Lowercased, punctuation-free terms of one passage.
    pub fn passage_terms(&self, index: usize) -> Vec<String> {
        normalized_terms(self.passage_tokens(index))
    }

    pub fn all_passage_terms(&self) -> Vec<Vec<String>> {
        (0..self.passages.len()).map(|i| self.passage_terms(i)).collect()
    }

    pub fn passage_text(&self, index: usize) -> String {
        join_tokens(self.passage_tokens(index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub id: String,
    pub book_id: BookId,
    pub split: Split,
    pub question_text: String,
    pub question: Vec<Token>,
    pub answer_texts: Vec<String>,
    pub answers: Vec<Vec<Token>>,
}

impl QaPair {
    pub fn new(id: impl Into<String>, book_id: BookId, split: Split, question: &str, answers: &[&str]) -> Self {
        QaPair {
            id: id.into(),
            book_id,
            split,
            question_text: question.to_string(),
            question: tokenize(question),
            answer_texts: answers.iter().map(|a| a.to_string()).collect(),
            answers: answers.iter().map(|a| tokenize(a)).collect(),
        }
    }

    pub fn question_terms(&self) -> Vec<String> {
        normalized_terms(&self.question)
    }

    /// Normalized answers, dropping references that normalize to nothing.
    pub fn answer_terms(&self) -> Vec<Vec<String>> {
        self.answers
            .iter()
            .map(|a| normalized_terms(a))
            .filter(|a| !a.is_empty())
            .collect()
    }
}
