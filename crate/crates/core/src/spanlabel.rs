//! Fixed-length span search: the window of a passage, as long as the answer,
//! with the highest Rouge-L against it.

use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId, QaPair};
use crate::error::{Error, Result};
use crate::index::RankedList;
use crate::metrics::lcs::{lcs_len, BitLcs};
use crate::metrics::rouge::f_measure;
use crate::metrics::RougeBeta;

/// Best window inside one passage. `start..end` counts normalized passage
/// terms (lowercased, punctuation dropped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScore {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanLabel {
    pub question_id: String,
    pub book_id: BookId,
    pub passage: usize,
    /// Rank of the passage in the candidate list, 0-based.
    pub rank: usize,
    /// Term offsets within the passage.
    pub start: usize,
    pub end: usize,
    /// Token offsets within the book, covering the same words.
    pub token_start: usize,
    pub token_end: usize,
    pub score: f64,
    pub text: String,
}

fn window_score(lcs: usize, answer_len: usize) -> f64 {
    f_measure(lcs, answer_len, answer_len, RougeBeta::default())
}

/// Scans every window of length `|answer|`; ties go to the earliest window.
pub fn best_span<T: PartialEq>(passage: &[T], answer: &[T]) -> Result<SpanScore> {
    let m = answer.len();
    if m == 0 {
        return Err(Error::invalid("answer is empty"));
    }
    if m > passage.len() {
        return Err(Error::AnswerLongerThanPassage {
            answer: m,
            passage: passage.len(),
        });
    }
    let windows = passage.len() - m + 1;
    let mut best = (0usize, 0usize);
    if let Some(bits) = BitLcs::new(m) {
        let masks: Vec<u64> = passage.iter().map(|x| BitLcs::match_mask(answer, x)).collect();
        for s in 0..windows {
            let l = bits.run(&masks[s..s + m]);
            if l > best.1 || s == 0 {
                best = (s, l);
                if l == m {
                    break;
                }
            }
        }
    } else {
        for s in 0..windows {
            let l = lcs_len(&passage[s..s + m], answer);
            if l > best.1 || s == 0 {
                best = (s, l);
                if l == m {
                    break;
                }
            }
        }
    }
    Ok(SpanScore {
        start: best.0,
        end: best.0 + m,
        score: window_score(best.1, m),
    })
}

/// Best span score of a passage against several references; 0 when the
/// passage is shorter than every reference.
pub fn best_span_any<T: PartialEq, A: AsRef<[T]>>(passage: &[T], answers: &[A]) -> f64 {
    answers
        .iter()
        .filter_map(|a| best_span(passage, a.as_ref()).ok())
        .map(|s| s.score)
        .fold(0.0, f64::max)
}

/// Book token index of each normalized term in a passage.
pub fn term_token_offsets(book: &Book, passage: usize) -> Vec<usize> {
    let p = &book.passages[passage];
    book.tokens[p.range()]
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_punct)
        .map(|(i, _)| p.start + i)
        .collect()
}

/// Best span over all candidate passages and all reference answers. Ties go
/// to the higher-ranked passage, then to the earlier reference.
pub fn weak_label(book: &Book, qa: &QaPair, candidates: &RankedList) -> Result<SpanLabel> {
    if candidates.is_empty() {
        return Err(Error::invalid(format!("question {}: no candidate passages", qa.id)));
    }
    let answers = qa.answer_terms();
    if answers.is_empty() {
        return Err(Error::invalid(format!(
            "question {}: answer is empty after normalization",
            qa.id
        )));
    }
    let mut best: Option<(usize, usize, SpanScore)> = None;
    for (rank, entry) in candidates.entries.iter().enumerate() {
        let terms = book.passage_terms(entry.passage);
        for a in &answers {
            let Ok(s) = best_span(&terms, a) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| s.score > b.2.score) {
                best = Some((rank, entry.passage, s));
            }
        }
    }
    let (rank, passage, s) = best.ok_or_else(|| {
        Error::invalid(format!(
            "question {}: every candidate passage is shorter than the answer",
            qa.id
        ))
    })?;
    let offsets = term_token_offsets(book, passage);
    let terms = book.passage_terms(passage);
    Ok(SpanLabel {
        question_id: qa.id.clone(),
        book_id: book.id.clone(),
        passage,
        rank,
        start: s.start,
        end: s.end,
        token_start: offsets[s.start],
        token_end: offsets[s.end - 1] + 1,
        score: s.score,
        text: terms[s.start..s.end].join(" "),
    })
}
