use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Book, Token};
use crate::error::{Error, Result};
use crate::index::{Bm25Index, PassageVectors, QueryOptions, TfIdfModel};

pub const N_FEATURES: usize = 4;
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["bm25", "tfidf", "unigram_overlap", "bigram_overlap"];

pub type Features = [f64; N_FEATURES];

/// Question-passage features for one book: BM25 score, TF-IDF cosine, share
/// of question content words found in the passage and share of question
/// content bigrams found in the passage.
pub struct FeatureExtractor<'a> {
    index: &'a Bm25Index,
    vectors: PassageVectors,
    content: Vec<HashSet<String>>,
    bigrams: Vec<HashSet<(String, String)>>,
}

fn content_terms(tokens: &[Token]) -> Vec<String> {
    tokens.iter().filter(|t| t.is_content()).map(Token::term).collect()
}

fn bigram_set(terms: &[String]) -> HashSet<(String, String)> {
    terms.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(book: &Book, index: &'a Bm25Index) -> Self {
        let terms = book.all_passage_terms();
        let vectors = PassageVectors::new(TfIdfModel::from_passages(&terms), &terms);
        let content: Vec<Vec<String>> = (0..book.passages.len())
            .map(|i| content_terms(book.passage_tokens(i)))
            .collect();
        FeatureExtractor {
            index,
            vectors,
            bigrams: content.iter().map(|c| bigram_set(c)).collect(),
            content: content.into_iter().map(|c| c.into_iter().collect()).collect(),
        }
    }

    pub fn features(&self, question: &[Token], passages: &[usize]) -> Vec<Features> {
        let bm25 = self
            .index
            .score_all(&Bm25Index::query_terms(question, QueryOptions::default()));
        let q_terms: Vec<String> = question.iter().filter(|t| !t.is_punct).map(Token::term).collect();
        let tfidf = self.vectors.similarities(&q_terms);
        let q_content = content_terms(question);
        let q_set: HashSet<&String> = q_content.iter().collect();
        let q_bigrams = bigram_set(&q_content);
        passages
            .iter()
            .map(|&p| {
                let uni = if q_set.is_empty() {
                    0.0
                } else {
                    q_set.iter().filter(|t| self.content[p].contains(**t)).count() as f64 / q_set.len() as f64
                };
                let bi = if q_bigrams.is_empty() {
                    0.0
                } else {
                    q_bigrams.iter().filter(|b| self.bigrams[p].contains(*b)).count() as f64 / q_bigrams.len() as f64
                };
                [bm25[p], tfidf[p], uni, bi]
            })
            .collect()
    }
}

/// Per-feature mean and standard deviation (population), fitted once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Features,
    pub std: Features,
}

impl Standardizer {
    pub fn fit(xs: &[Features]) -> Self {
        let n = xs.len().max(1) as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        for x in xs {
            for j in 0..N_FEATURES {
                mean[j] += x[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        for x in xs {
            for j in 0..N_FEATURES {
                std[j] += (x[j] - mean[j]).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &Features) -> Features {
        std::array::from_fn(|j| (x[j] - self.mean[j]) / self.std[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            learning_rate: 0.1,
            epochs: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean logistic loss on the training examples after the pass.
    pub loss: f64,
    /// Euclidean norm of the parameter change.
    pub update_norm: f64,
}

/// Logistic-regression ranker over [`Features`]. Training is per-example
/// stochastic gradient descent in the given order, so it is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRanker {
    pub weights: Features,
    pub bias: f64,
    pub standardizer: Option<Standardizer>,
    pub config: RankerConfig,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z), stable for large |z|.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LinearRanker {
    pub fn new(config: RankerConfig) -> Self {
        LinearRanker {
            weights: [0.0; N_FEATURES],
            bias: 0.0,
            standardizer: None,
            config,
        }
    }

    /// Ranks by raw BM25 score alone.
    pub fn bm25_only() -> Self {
        LinearRanker {
            weights: [1.0, 0.0, 0.0, 0.0],
            ..LinearRanker::new(RankerConfig::default())
        }
    }

    fn prepared(&self, x: &Features) -> Features {
        match &self.standardizer {
            Some(s) => s.apply(x),
            None => *x,
        }
    }

    pub fn score(&self, x: &Features) -> f64 {
        let x = self.prepared(x);
        self.bias + self.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Candidate positions by score descending, ties by position.
    pub fn rank(&self, features: &[Features]) -> Vec<usize> {
        let scores: Vec<f64> = features.iter().map(|x| self.score(x)).collect();
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        order
    }

    pub fn params(&self) -> [f64; N_FEATURES + 1] {
        let mut p = [0.0; N_FEATURES + 1];
        p[..N_FEATURES].copy_from_slice(&self.weights);
        p[N_FEATURES] = self.bias;
        p
    }

    /// Fit the standardizer unless one is already set.
    pub fn fit_standardizer(&mut self, xs: &[Features]) {
        if self.standardizer.is_none() {
            self.standardizer = Some(Standardizer::fit(xs));
        }
    }

    pub fn mean_loss(&self, examples: &[(Features, bool)]) -> f64 {
        let total: f64 = examples
            .iter()
            .map(|(x, y)| {
                let z = self.score(x);
                if *y {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            })
            .sum();
        total / examples.len() as f64
    }

    /// `config.epochs` passes of SGD on the logistic loss.
    pub fn train(&mut self, examples: &[(Features, bool)]) -> Result<TrainStats> {
        if examples.is_empty() {
            return Err(Error::invalid("no training examples"));
        }
        let xs: Vec<Features> = examples.iter().map(|e| e.0).collect();
        self.fit_standardizer(&xs);
        let before = self.params();
        let prepared: Vec<Features> = xs.iter().map(|x| self.prepared(x)).collect();
        let lr = self.config.learning_rate;
        for _ in 0..self.config.epochs {
            for (x, (_, y)) in prepared.iter().zip(examples) {
                let z = self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                let g = sigmoid(z) - if *y { 1.0 } else { 0.0 };
                for (w, v) in self.weights.iter_mut().zip(x) {
                    *w -= lr * g * v;
                }
                self.bias -= lr * g;
            }
        }
        let after = self.params();
        let update_norm = before
            .iter()
            .zip(&after)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(TrainStats {
            loss: self.mean_loss(examples),
            update_norm,
        })
    }
}
