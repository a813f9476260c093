//! Evidence retrieval, weak supervision and evaluation for question answering
//! over full-length books and movie scripts.
//!
//! The crate covers the lexical side of a ranker-reader pipeline: fixed-size
//! passage chunking, per-book BM25 retrieval, weak passage and span labels,
//! inverse-cloze training data, masked-span pre-reading data, a hard-EM loop
//! over pluggable reader scorers, QA metrics and annotation analytics.

pub mod corpus;
pub mod distant;
pub mod error;
pub mod evalharness;
pub mod hardem;
pub mod ict;
pub mod index;
pub mod metrics;
pub mod preread;
pub mod seed;
pub mod spanlabel;
pub mod taxonomy;

pub use error::{Error, Result};
