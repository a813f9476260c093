use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_subsets: usize,
    pub subset_size: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_subsets: 10_000,
            subset_size: 1_000,
            seed: 0,
        }
    }
}

/// One-sided paired bootstrap test of "system A scores higher than B".
///
/// Draws `n_subsets` question subsets of `subset_size` indices with
/// replacement and returns the fraction of subsets on which A's mean does not
/// exceed B's. Ties count against A.
pub fn bootstrap_test(scores_a: &[f64], scores_b: &[f64], cfg: &BootstrapConfig) -> Result<f64> {
    if scores_a.is_empty() || scores_b.is_empty() {
        return Err(Error::invalid("bootstrap test needs non-empty score lists"));
    }
    if scores_a.len() != scores_b.len() {
        return Err(Error::invalid(format!(
            "paired scores differ in length: {} vs {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    if cfg.n_subsets == 0 || cfg.subset_size == 0 {
        return Err(Error::invalid("bootstrap needs at least one subset of size ≥ 1"));
    }
    let diffs: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut not_better = 0usize;
    for _ in 0..cfg.n_subsets {
        let total: f64 = (0..cfg.subset_size)
            .map(|_| diffs[rng.random_range(0..diffs.len())])
            .sum();
        if total <= 0.0 {
            not_better += 1;
        }
    }
    Ok(not_better as f64 / cfg.n_subsets as f64)
}
