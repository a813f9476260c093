use std::collections::HashMap;

/// Exact match of normalized token sequences, as 0.0 or 1.0.
pub fn em<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let same =
        candidate.len() == reference.len() && candidate.iter().zip(reference).all(|(a, b)| a.as_ref() == b.as_ref());
    if same {
        1.0
    } else {
        0.0
    }
}

/// Token-multiset F1. Two empty sequences score 1.0; one empty side scores 0.0.
pub fn f1<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, isize> = HashMap::new();
    for t in reference {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in candidate {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / candidate.len() as f64;
    let r = common as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Best score of `candidate` against any reference; 0.0 with no references.
pub fn max_over_references<T, R, F>(candidate: &[T], references: &[R], metric: F) -> f64
where
    R: AsRef<[T]>,
    F: Fn(&[T], &[T]) -> f64,
{
    references
        .iter()
        .map(|r| metric(candidate, r.as_ref()))
        .fold(0.0, f64::max)
}
