//! Answer normalization and text-overlap metrics: Rouge-L, BLEU, exact match,
//! token F1, plus a paired bootstrap significance test.

mod bleu;
mod bootstrap;
pub mod lcs;
mod overlap;
pub(crate) mod rouge;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu, corpus_bleu, BLEU_EPSILON};
pub use bootstrap::{bootstrap_test, BootstrapConfig};
pub use overlap::{em, f1, max_over_references};
pub use rouge::{rouge_l, rouge_l_with, RougeBeta, DEFAULT_ROUGE_BETA};

use crate::corpus::{normalized_terms, tokenize};

/// Lowercase, drop punctuation tokens.
pub fn normalize_answer(text: &str) -> Vec<String> {
    normalized_terms(&tokenize(text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub question_id: String,
    pub rouge_l: f64,
    pub bleu1: f64,
    pub bleu4: f64,
    pub em: f64,
    pub f1: f64,
    /// No prediction was supplied; every score is zero.
    pub missing: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub rouge_l: f64,
    pub bleu1: f64,
    pub bleu4: f64,
    pub em: f64,
    pub f1: f64,
}

/// Per-example scores and their arithmetic means, all in [0, 1].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub examples: Vec<ExampleScores>,
    pub means: MetricMeans,
    pub count: usize,
    pub missing: usize,
}

impl MetricReport {
    pub fn from_examples(examples: Vec<ExampleScores>) -> Self {
        let count = examples.len();
        let missing = examples.iter().filter(|e| e.missing).count();
        let mut means = MetricMeans::default();
        if count > 0 {
            let n = count as f64;
            let mean = |f: fn(&ExampleScores) -> f64| examples.iter().map(f).sum::<f64>() / n;
            means = MetricMeans {
                rouge_l: mean(|e| e.rouge_l),
                bleu1: mean(|e| e.bleu1),
                bleu4: mean(|e| e.bleu4),
                em: mean(|e| e.em),
                f1: mean(|e| e.f1),
            };
        }
        MetricReport {
            examples,
            means,
            count,
            missing,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("The Cat!"), ["the", "cat"]);
        assert!(normalize_answer("").is_empty());
        assert!(normalize_answer("?!.").is_empty());
    }

    #[test]
    fn normalization_golden() {
        // apostrophes and periods are split off as punctuation tokens, then dropped
        assert_eq!(
            normalize_answer("Mr. O'Brien's house."),
            ["mr", "o", "brien", "s", "house"]
        );
    }

    #[test]
    fn report_means() {
        let ex = |id: &str, v: f64| ExampleScores {
            question_id: id.into(),
            rouge_l: v,
            bleu1: v,
            bleu4: v,
            em: v,
            f1: v,
            missing: false,
        };
        let r = MetricReport::from_examples(vec![ex("a", 1.0), ex("b", 0.0), ex("c", 0.5)]);
        assert_eq!(r.count, 3);
        assert!((r.means.rouge_l - 0.5).abs() < 1e-12);
        assert_eq!(MetricReport::from_examples(vec![]).means, MetricMeans::default());
    }
}
