//! Hard-EM ranker training. The E-step relabels, per question, the candidate
//! passages a reader scores highest for the gold answer; the M-step retrains
//! the ranker on those labels.

mod planted;
mod ranker;
mod scorer;

use std::collections::HashSet;

use log::warn;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, QaPair};
use crate::error::{Error, Result};
use crate::index::{Bm25Index, QueryOptions};
use crate::seed::item_rng;

pub use planted::{planted_corpus, PlantedConfig, PlantedCorpus};
pub use ranker::{
    FeatureExtractor, Features, LinearRanker, RankerConfig, Standardizer, TrainStats, FEATURE_NAMES, N_FEATURES,
};
pub use scorer::{serve_scorer, ExternalScorer, LexicalScorer, ReaderScorer, ScoreRequest, ScoreResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub passage: usize,
    pub text: String,
    pub features: Features,
}

/// A question with its retrieved candidate pool, in retrieval order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmQuestion {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub candidates: Vec<Candidate>,
    /// Known answer passage, for synthetic data.
    pub gold: Option<usize>,
}

impl EmQuestion {
    pub fn features(&self) -> Vec<Features> {
        self.candidates.iter().map(|c| c.features).collect()
    }
}

/// Candidate pools (BM25 top-`pool_k`) and features for questions on one book.
pub fn prepare_questions(
    book: &Book,
    index: &Bm25Index,
    questions: &[&QaPair],
    pool_k: usize,
) -> Result<Vec<EmQuestion>> {
    let extractor = FeatureExtractor::new(book, index);
    questions
        .iter()
        .map(|qa| {
            let list = index.retrieve(&qa.question, pool_k, QueryOptions::default())?;
            let passages: Vec<usize> = list.passages().collect();
            let feats = extractor.features(&qa.question, &passages);
            Ok(EmQuestion {
                id: qa.id.clone(),
                question: qa.question_text.clone(),
                answers: qa.answer_texts.clone(),
                candidates: passages
                    .iter()
                    .zip(feats)
                    .map(|(&p, features)| Candidate {
                        passage: p,
                        text: book.passage_text(p),
                        features,
                    })
                    .collect(),
                gold: None,
            })
        })
        .collect()
}

/// The `k` candidates with the highest reader score (maximum over reference
/// answers), ties by retrieval rank. Returns passage ids, best first.
pub fn e_step(reader: &dyn ReaderScorer, q: &EmQuestion, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("e-step k must be at least 1"));
    }
    if q.candidates.is_empty() {
        return Err(Error::invalid(format!("question {}: no candidates", q.id)));
    }
    if k > q.candidates.len() {
        warn!(
            "question {}: k={} exceeds the {} candidates; keeping all",
            q.id,
            k,
            q.candidates.len()
        );
    }
    let answers: Vec<&str> = if q.answers.is_empty() {
        vec![""]
    } else {
        q.answers.iter().map(String::as_str).collect()
    };
    let mut requests = Vec::with_capacity(q.candidates.len() * answers.len());
    for (i, c) in q.candidates.iter().enumerate() {
        for (j, a) in answers.iter().enumerate() {
            requests.push(ScoreRequest {
                id: format!("{}#{i}#{j}", q.id),
                question: q.question.clone(),
                answer: a.to_string(),
                passage: c.text.clone(),
            });
        }
    }
    let scores = reader.score_batch(&requests)?;
    if scores.len() != requests.len() {
        return Err(Error::ScorerProcess(format!(
            "expected {} scores, got {}",
            requests.len(),
            scores.len()
        )));
    }
    let per_candidate: Vec<f64> = scores
        .chunks(answers.len())
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..q.candidates.len()).collect();
    order.sort_by(|&a, &b| per_candidate[b].total_cmp(&per_candidate[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order.into_iter().map(|i| q.candidates[i].passage).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub iterations: usize,
    /// Positives kept per question by the E-step.
    pub k: usize,
    /// BM25 candidate pool depth.
    pub pool_k: usize,
    /// Positive/negative ratio for M-step negative sampling.
    pub sigma: f64,
    pub seed: u64,
    pub ranker: RankerConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            iterations: 2,
            k: 1,
            pool_k: 32,
            sigma: 1.0,
            seed: 0,
            ranker: RankerConfig::default(),
        }
    }
}

/// Labeled examples for one M-step: positives, then round(|pos|/σ) negatives
/// drawn from the rest of each pool (seeded by question and iteration).
pub fn training_examples(
    questions: &[EmQuestion],
    positives: &[Vec<usize>],
    cfg: &EmConfig,
    iteration: usize,
) -> Vec<(Features, bool)> {
    let mut out = Vec::new();
    for (q, pos) in questions.iter().zip(positives) {
        let pos_set: HashSet<usize> = pos.iter().copied().collect();
        let mut rest = Vec::new();
        for c in &q.candidates {
            if pos_set.contains(&c.passage) {
                out.push((c.features, true));
            } else {
                rest.push(c.features);
            }
        }
        let want = ((pos.len() as f64 / cfg.sigma).round() as usize).min(rest.len());
        let mut rng = item_rng(cfg.seed, &[q.id.as_bytes(), &(iteration as u64).to_le_bytes()]);
        let mut picked = sample(&mut rng, rest.len(), want).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| (rest[i], false)));
    }
    out
}

pub fn m_step(
    ranker: &mut LinearRanker,
    questions: &[EmQuestion],
    positives: &[Vec<usize>],
    cfg: &EmConfig,
    iteration: usize,
) -> Result<TrainStats> {
    let examples = training_examples(questions, positives, cfg, iteration);
    if !examples.iter().any(|e| e.1) {
        return Err(Error::invalid("m-step has no positive labels"));
    }
    ranker.train(&examples)
}

/// Share of questions whose ranker top-1 is the gold passage; `None` without gold labels.
pub fn precision_at_1(ranker: &LinearRanker, questions: &[EmQuestion]) -> Option<f64> {
    let labeled: Vec<&EmQuestion> = questions.iter().filter(|q| q.gold.is_some()).collect();
    if labeled.is_empty() {
        return None;
    }
    let hits = labeled
        .iter()
        .filter(|q| {
            let order = ranker.rank(&q.features());
            order.first().map(|&i| q.candidates[i].passage) == q.gold
        })
        .count();
    Some(hits as f64 / labeled.len() as f64)
}

/// Share of questions whose label set contains the gold passage.
pub fn label_recall(questions: &[EmQuestion], positives: &[Vec<usize>]) -> Option<f64> {
    let mut n = 0;
    let mut hits = 0;
    for (q, pos) in questions.iter().zip(positives) {
        if let Some(g) = q.gold {
            n += 1;
            hits += usize::from(pos.contains(&g));
        }
    }
    (n > 0).then(|| hits as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Share of questions whose label set changed in this iteration's E-step.
    pub churn: f64,
    pub loss: f64,
    pub update_norm: f64,
    /// Ranker precision@1 on held-out questions with gold passages.
    pub heldout_precision_at_1: Option<f64>,
    /// Gold passages recovered by the label sets.
    pub label_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmState {
    /// Last completed iteration; 0 is the initial training on the starting labels.
    pub iteration: usize,
    pub positives: Vec<Vec<usize>>,
    pub ranker: LinearRanker,
    pub history: Vec<IterationStats>,
    /// First iteration whose E-step left every label set unchanged.
    pub converged_at: Option<usize>,
}

/// A failed run with everything completed before the failure.
#[derive(Debug)]
pub struct EmFailure {
    pub error: Error,
    pub state: Option<Box<EmState>>,
}

impl std::fmt::Display for EmFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.state {
            Some(s) => write!(f, "{} (after iteration {})", self.error, s.iteration),
            None => self.error.fmt(f),
        }
    }
}

impl std::error::Error for EmFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Label sets of the top `k` retrieval candidates.
pub fn initial_labels(questions: &[EmQuestion], k: usize) -> Vec<Vec<usize>> {
    questions
        .iter()
        .map(|q| q.candidates.iter().take(k).map(|c| c.passage).collect())
        .collect()
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    let a: HashSet<_> = a.iter().collect();
    let b: HashSet<_> = b.iter().collect();
    a == b
}

/// Train on `initial` labels, then run `cfg.iterations` rounds of E-step and
/// warm-started M-step. Questions are scored in parallel.
pub fn hard_em(
    reader: &dyn ReaderScorer,
    questions: &[EmQuestion],
    initial: Vec<Vec<usize>>,
    heldout: &[EmQuestion],
    cfg: &EmConfig,
) -> std::result::Result<EmState, EmFailure> {
    let fail = |error, state| EmFailure { error, state };
    if initial.len() != questions.len() {
        return Err(fail(
            Error::invalid("one initial label set per question is required"),
            None,
        ));
    }
    let mut ranker = LinearRanker::new(cfg.ranker.clone());
    let stats = m_step(&mut ranker, questions, &initial, cfg, 0).map_err(|e| fail(e, None))?;
    let mut state = EmState {
        iteration: 0,
        history: vec![IterationStats {
            iteration: 0,
            churn: 0.0,
            loss: stats.loss,
            update_norm: stats.update_norm,
            heldout_precision_at_1: precision_at_1(&ranker, heldout),
            label_recall: label_recall(questions, &initial),
        }],
        positives: initial,
        ranker,
        converged_at: None,
    };
    for t in 1..=cfg.iterations {
        let labels: Result<Vec<Vec<usize>>> = questions.par_iter().map(|q| e_step(reader, q, cfg.k)).collect();
        let labels = match labels {
            Ok(l) => l,
            Err(e) => return Err(fail(e, Some(Box::new(state)))),
        };
        let changed = labels
            .iter()
            .zip(&state.positives)
            .filter(|(a, b)| !same_set(a, b))
            .count();
        let mut ranker = state.ranker.clone();
        let stats = match m_step(&mut ranker, questions, &labels, cfg, t) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, Some(Box::new(state)))),
        };
        if changed == 0 && state.converged_at.is_none() {
            state.converged_at = Some(t);
        }
        state.history.push(IterationStats {
            iteration: t,
            churn: changed as f64 / questions.len().max(1) as f64,
            loss: stats.loss,
            update_norm: stats.update_norm,
            heldout_precision_at_1: precision_at_1(&ranker, heldout),
            label_recall: label_recall(questions, &labels),
        });
        state.iteration = t;
        state.positives = labels;
        state.ranker = ranker;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant;

    impl ReaderScorer for Constant {
        fn score_batch(&self, r: &[ScoreRequest]) -> Result<Vec<f64>> {
            Ok(vec![0.0; r.len()])
        }
    }

    fn question(passages: &[&str], answer: &str) -> EmQuestion {
        EmQuestion {
            id: "q".into(),
            question: "what".into(),
            answers: vec![answer.into()],
            candidates: passages
                .iter()
                .enumerate()
                .map(|(i, t)| Candidate {
                    passage: 10 + i,
                    text: t.to_string(),
                    features: [i as f64, 0.0, 0.0, 0.0],
                })
                .collect(),
            gold: None,
        }
    }

    #[test]
    fn planted_answer_is_top() {
        let q = question(
            &["red fox", "blue sky here", "the green whale swims", "green", "whale"],
            "green whale",
        );
        assert_eq!(e_step(&LexicalScorer, &q, 1).unwrap(), [12]);
    }

    #[test]
    fn constant_scores_keep_rank_order() {
        let q = question(&["a", "b", "c"], "x");
        assert_eq!(e_step(&Constant, &q, 2).unwrap(), [10, 11]);
        assert_eq!(e_step(&Constant, &q, 9).unwrap(), [10, 11, 12]);
        assert!(e_step(&Constant, &q, 0).is_err());
    }

    #[test]
    fn zero_iterations_echo_initial() {
        let qs = vec![question(&["a b", "c d"], "c")];
        let init = initial_labels(&qs, 1);
        let s = hard_em(
            &LexicalScorer,
            &qs,
            init.clone(),
            &[],
            &EmConfig {
                iterations: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.positives, init);
        assert_eq!(s.iteration, 0);
        assert_eq!(s.history.len(), 1);
    }

    #[test]
    fn constant_reader_reaches_fixed_point() {
        let qs = vec![question(&["a b", "c d", "e f"], "c")];
        let s = hard_em(
            &Constant,
            &qs,
            vec![vec![11]],
            &[],
            &EmConfig {
                iterations: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.history[1].churn, 1.0);
        assert_eq!(s.history[2].churn, 0.0);
        assert_eq!(s.history[3].churn, 0.0);
        assert_eq!(s.converged_at, Some(2));
    }
}
