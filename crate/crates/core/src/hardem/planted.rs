//! Synthetic books with a known answer passage per question and lexical
//! decoys that BM25 prefers.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{prepare_questions, EmQuestion};
use crate::corpus::{tokenize, Book, BookId, BookKind, QaPair, Split, Stopwords};
use crate::error::{Error, Result};
use crate::index::build_index;
use crate::seed::item_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub books: usize,
    pub questions_per_book: usize,
    pub passages_per_book: usize,
    pub passage_len: usize,
    pub decoys_per_question: usize,
    /// Books at the end whose questions are held out for evaluation.
    pub heldout_books: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            books: 50,
            questions_per_book: 3,
            passages_per_book: 16,
            passage_len: 40,
            decoys_per_question: 3,
            heldout_books: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub books: Vec<Book>,
    pub questions: Vec<QaPair>,
    /// Question id → planted passage.
    pub gold: HashMap<String, usize>,
    /// Question id → decoy passages.
    pub decoys: HashMap<String, Vec<usize>>,
    pub heldout_books: usize,
}

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Distinct pronounceable non-words, never stopwords.
struct WordSource {
    next: usize,
    stopwords: std::sync::Arc<Stopwords>,
}

impl WordSource {
    fn word(&mut self) -> String {
        loop {
            let mut n = self.next;
            self.next += 1;
            let mut w = String::new();
            for _ in 0..3 {
                let syl = n % (ONSETS.len() * VOWELS.len());
                n /= ONSETS.len() * VOWELS.len();
                w.push_str(ONSETS[syl / VOWELS.len()]);
                w.push_str(VOWELS[syl % VOWELS.len()]);
            }
            if n == 0 && !self.stopwords.contains(&w) {
                return w;
            }
        }
    }
}

fn non_adjacent_positions(rng: &mut ChaCha8Rng, len: usize, count: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < count {
        let p = rng.random_range(0..len);
        if picked.iter().all(|&q| p.abs_diff(q) >= 2) {
            picked.push(p);
        }
    }
    picked
}

/// Each question "What did q1 q2 q3 do?" with answer "a1 a2" has one passage
/// holding "q1 q2 q3 a1 a2" contiguously and decoy passages repeating each
/// q-word three times, never next to another q-word.
pub fn planted_corpus(cfg: &PlantedConfig) -> Result<PlantedCorpus> {
    let slots = cfg.questions_per_book * (1 + cfg.decoys_per_question);
    if slots > cfg.passages_per_book {
        return Err(Error::invalid(format!(
            "{slots} planted and decoy passages do not fit in {} passages",
            cfg.passages_per_book
        )));
    }
    if cfg.passage_len < 3 * cfg.decoys_per_question.max(3) * 2 || cfg.passage_len < 5 {
        return Err(Error::invalid("passages are too short for the planted patterns"));
    }
    if cfg.heldout_books > cfg.books {
        return Err(Error::invalid("more held-out books than books"));
    }
    let mut words = WordSource {
        next: 0,
        stopwords: Stopwords::bundled(),
    };
    let filler: Vec<String> = (0..600).map(|_| words.word()).collect();
    let mut corpus = PlantedCorpus {
        books: Vec::new(),
        questions: Vec::new(),
        gold: HashMap::new(),
        decoys: HashMap::new(),
        heldout_books: cfg.heldout_books,
    };
    for b in 0..cfg.books {
        let id = format!("planted{b:03}");
        let mut rng = item_rng(cfg.seed, &[id.as_bytes()]);
        let mut passages: Vec<Vec<String>> = (0..cfg.passages_per_book)
            .map(|_| {
                (0..cfg.passage_len)
                    .map(|_| filler[rng.random_range(0..filler.len())].clone())
                    .collect()
            })
            .collect();
        let mut order: Vec<usize> = (0..cfg.passages_per_book).collect();
        order.shuffle(&mut rng);
        let mut slots = order.into_iter();
        let split = if b + cfg.heldout_books >= cfg.books {
            Split::Test
        } else {
            Split::Train
        };
        for q in 0..cfg.questions_per_book {
            let qw: Vec<String> = (0..3).map(|_| words.word()).collect();
            let aw: Vec<String> = (0..2).map(|_| words.word()).collect();
            let gold = slots.next().expect("slot count checked");
            let at = rng.random_range(0..=cfg.passage_len - 5);
            for (i, w) in qw.iter().chain(&aw).enumerate() {
                passages[gold][at + i] = w.clone();
            }
            let mut decoys = Vec::new();
            for _ in 0..cfg.decoys_per_question {
                let d = slots.next().expect("slot count checked");
                let pos = non_adjacent_positions(&mut rng, cfg.passage_len, 9);
                for (i, p) in pos.into_iter().enumerate() {
                    passages[d][p] = qw[i % 3].clone();
                }
                decoys.push(d);
            }
            let qid = format!("{id}:{q}");
            let qa = QaPair::new(
                qid.clone(),
                BookId::from(id.as_str()),
                split,
                &format!("What did {} {} {} do?", qw[0], qw[1], qw[2]),
                &[aw.join(" ").as_str()],
            );
            corpus.gold.insert(qid.clone(), gold);
            corpus.decoys.insert(qid, decoys);
            corpus.questions.push(qa);
        }
        let tokens = passages.into_iter().flat_map(|p| tokenize(&p.join(" "))).collect();
        corpus.books.push(Book::from_tokens(
            BookId::from(id.as_str()),
            BookKind::Book,
            tokens,
            cfg.passage_len,
        ));
    }
    Ok(corpus)
}

impl PlantedCorpus {
    /// Training and held-out questions with BM25 candidate pools and gold passages.
    pub fn em_questions(&self, pool_k: usize) -> Result<(Vec<EmQuestion>, Vec<EmQuestion>)> {
        let heldout_from = self.books.len() - self.heldout_books;
        let mut train = Vec::new();
        let mut heldout = Vec::new();
        for (b, book) in self.books.iter().enumerate() {
            let index = build_index(book, Default::default())?;
            let qs: Vec<&QaPair> = self.questions.iter().filter(|q| q.book_id == book.id).collect();
            let mut prepared = prepare_questions(book, &index, &qs, pool_k)?;
            for q in &mut prepared {
                q.gold = self.gold.get(&q.id).copied();
            }
            if b >= heldout_from {
                heldout.extend(prepared);
            } else {
                train.extend(prepared);
            }
        }
        Ok((train, heldout))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let c = planted_corpus(&PlantedConfig {
            books: 3,
            heldout_books: 1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.books.len(), 3);
        assert_eq!(c.questions.len(), 9);
        for q in &c.questions {
            let book = c.books.iter().find(|b| b.id == q.book_id).unwrap();
            let gold = book.passage_terms(c.gold[&q.id]).join(" ");
            let a = q.answer_texts[0].clone();
            let qw: Vec<String> = q
                .question_terms()
                .into_iter()
                .filter(|w| !["what", "did", "do"].contains(&w.as_str()))
                .collect();
            assert!(gold.contains(&format!("{} {a}", qw.join(" "))));
            for &d in &c.decoys[&q.id] {
                let terms = book.passage_terms(d);
                for w in &qw {
                    assert_eq!(terms.iter().filter(|t| *t == w).count(), 3);
                }
                for pair in terms.windows(2) {
                    assert!(!(qw.contains(&pair[0]) && qw.contains(&pair[1])));
                }
            }
        }
    }
}
