use std::collections::HashMap;
use std::hash::Hash;

/// Numerator substituted for a zero n-gram match count (n ≥ 2) in sentence-level BLEU.
pub const BLEU_EPSILON: f64 = 0.1;

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// (clipped matches, candidate n-gram total) for one order.
fn clipped_matches<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (g, c) in ngram_counts(r.as_ref(), n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matches = cand
        .iter()
        .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

/// Reference length closest to `cand_len`; ties go to the shorter reference.
fn closest_ref_len<T, R: AsRef<[T]>>(cand_len: usize, references: &[R]) -> usize {
    references
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&l| (l.abs_diff(cand_len), l))
        .unwrap_or(0)
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        0.0
    } else if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

/// Sentence-level BLEU with uniform weights over orders 1..=max_n.
///
/// N-gram counts are clipped against the maximum count in any single
/// reference. A candidate with no unigram match scores 0; zero match counts
/// for higher orders are replaced by [`BLEU_EPSILON`].
pub fn bleu<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], max_n: usize) -> f64 {
    if candidate.is_empty() || references.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (m, total) = clipped_matches(candidate, references, n);
        if n == 1 && m == 0 {
            return 0.0;
        }
        let num = if m == 0 { BLEU_EPSILON } else { m as f64 };
        log_sum += (num / total.max(1) as f64).ln();
    }
    let bp = brevity_penalty(candidate.len(), closest_ref_len(candidate.len(), references));
    bp * (log_sum / max_n as f64).exp()
}

/// Corpus-level BLEU: counts are pooled over all segments, without smoothing.
pub fn corpus_bleu<T: Eq + Hash, R: AsRef<[T]>>(segments: &[(Vec<T>, Vec<R>)], max_n: usize) -> f64 {
    if max_n == 0 {
        return 0.0;
    }
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (cand, refs) in segments {
        if refs.is_empty() {
            continue;
        }
        cand_len += cand.len();
        ref_len += closest_ref_len(cand.len(), refs);
        for n in 1..=max_n {
            let (m, t) = clipped_matches(cand, refs, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    if matches.iter().zip(&totals).any(|(&m, &t)| m == 0 || t == 0) {
        return 0.0;
    }
    let log_sum: f64 = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum();
    brevity_penalty(cand_len, ref_len) * (log_sum / max_n as f64).exp()
}
