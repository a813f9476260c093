use serde::{Deserialize, Serialize};

use super::lcs::lcs_len;

/// Recall weight used by the common NLG evaluation toolkits.
pub const DEFAULT_ROUGE_BETA: f64 = 1.2;

/// How recall is weighted against precision in the LCS F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeBeta {
    Fixed(f64),
    /// β = P/R, as in the original Rouge-L definition.
    PrecisionOverRecall,
}

impl Default for RougeBeta {
    fn default() -> Self {
        RougeBeta::Fixed(DEFAULT_ROUGE_BETA)
    }
}

/// Rouge-L F-measure with β = 1.2. Inputs are expected to be normalized.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> f64 {
    rouge_l_with(candidate, reference, RougeBeta::default())
}

pub fn rouge_l_with<T: PartialEq>(candidate: &[T], reference: &[T], beta: RougeBeta) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    f_measure(lcs_len(candidate, reference), candidate.len(), reference.len(), beta)
}

/// F = (1 + β²)·P·R / (R + β²·P) with P = lcs/|cand|, R = lcs/|ref|; zero when lcs is zero.
pub(crate) fn f_measure(lcs: usize, cand_len: usize, ref_len: usize, beta: RougeBeta) -> f64 {
    if lcs == 0 || cand_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand_len as f64;
    let r = lcs as f64 / ref_len as f64;
    let b2 = match beta {
        RougeBeta::Fixed(b) => b * b,
        RougeBeta::PrecisionOverRecall => (p / r) * (p / r),
    };
    ((1.0 + b2) * p * r) / (r + b2 * p)
}
