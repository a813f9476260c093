use std::collections::{BTreeMap, HashMap};

use crate::corpus::BookStats;

/// Passage-level document frequencies of one book.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdfModel {
    n_passages: usize,
    df: HashMap<String, u32>,
}

impl TfIdfModel {
    pub fn from_book_stats(stats: &BookStats) -> Self {
        TfIdfModel {
            n_passages: stats.passage_count,
            df: stats.passage_df.clone(),
        }
    }

    pub fn from_passages<S: AsRef<str>>(passages: &[Vec<S>]) -> Self {
        let mut df: HashMap<String, u32> = HashMap::new();
        for p in passages {
            let mut terms: Vec<&str> = p.iter().map(AsRef::as_ref).collect();
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t.to_string()).or_insert(0) += 1;
            }
        }
        TfIdfModel {
            n_passages: passages.len(),
            df,
        }
    }

    /// Smoothed idf, ln((1 + N) / (1 + df)) + 1; strictly positive.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_passages as f64) / (1.0 + df)).ln() + 1.0
    }

    /// Term → tf·idf weight, in term order.
    pub fn vector<'a, S: AsRef<str>>(&self, terms: &'a [S]) -> BTreeMap<&'a str, f64> {
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in terms {
            *tf.entry(t.as_ref()).or_insert(0) += 1;
        }
        tf.into_iter().map(|(t, n)| (t, n as f64 * self.idf(t))).collect()
    }
}

fn norm<K>(v: &BTreeMap<K, f64>) -> f64 {
    v.values().map(|w| w * w).sum::<f64>().sqrt()
}

/// Cosine similarity of the TF-IDF vectors of two term sequences (already
/// lowercased, punctuation removed). A zero vector on either side scores 0.
pub fn tfidf_similarity<S: AsRef<str>>(a: &[S], b: &[S], model: &TfIdfModel) -> f64 {
    let va = model.vector(a);
    let vb = model.vector(b);
    let (na, nb) = (norm(&va), norm(&vb));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    for (t, w) in &va {
        if let Some(wb) = vb.get(t) {
            dot += w * wb;
        }
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Pre-computed passage vectors for ranking every passage of a book against a
/// short query. Scores are bitwise identical to [`tfidf_similarity`].
#[derive(Debug, Clone)]
pub struct PassageVectors {
    model: TfIdfModel,
    postings: HashMap<String, Vec<(u32, f64)>>,
    norms: Vec<f64>,
}

impl PassageVectors {
    pub fn new<S: AsRef<str>>(model: TfIdfModel, passages: &[Vec<S>]) -> Self {
        let mut postings: HashMap<String, Vec<(u32, f64)>> = HashMap::new();
        let mut norms = Vec::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            let v = model.vector(p);
            norms.push(norm(&v));
            for (t, w) in v {
                postings.entry(t.to_string()).or_default().push((i as u32, w));
            }
        }
        PassageVectors { model, postings, norms }
    }

    pub fn model(&self) -> &TfIdfModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Cosine similarity of the query against every passage.
    pub fn similarities<S: AsRef<str>>(&self, query: &[S]) -> Vec<f64> {
        let q = self.model.vector(query);
        let qn = norm(&q);
        let mut dots = vec![0.0; self.norms.len()];
        if qn == 0.0 {
            return dots;
        }
        for (t, w) in &q {
            if let Some(ps) = self.postings.get(*t) {
                for &(p, pw) in ps {
                    dots[p as usize] += w * pw;
                }
            }
        }
        dots.iter()
            .zip(&self.norms)
            .map(|(&d, &pn)| {
                if pn == 0.0 {
                    0.0
                } else {
                    (d / (qn * pn)).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}
