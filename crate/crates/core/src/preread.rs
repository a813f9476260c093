//! Masked-span "pre-reading" data: spans with Poisson lengths are replaced by
//! a single sentinel each, paired with the untouched passage.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Book, BookId};
use crate::error::{Error, Result};
use crate::seed::item_rng;

/// Replaces each masked span. The tokenizer splits `<` and `>` off, so this
/// string can never be an ordinary token.
pub const MASK_TOKEN: &str = "<mask>";

const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrereadConfig {
    pub mask_ratio: f64,
    pub poisson_lambda: f64,
    /// Maximum number of passages exported; `None` keeps all.
    pub pool_size: Option<usize>,
    pub seed: u64,
}

impl Default for PrereadConfig {
    fn default() -> Self {
        PrereadConfig {
            mask_ratio: 0.15,
            poisson_lambda: 3.0,
            pool_size: None,
            seed: 0,
        }
    }
}

impl PrereadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_ratio) {
            return Err(Error::invalid(format!(
                "mask ratio must be in [0, 1], got {}",
                self.mask_ratio
            )));
        }
        if !(self.poisson_lambda > 0.0 && self.poisson_lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {}",
                self.poisson_lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpan {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPassage {
    pub book_id: BookId,
    pub passage: usize,
    pub masked: Vec<String>,
    pub original: Vec<String>,
    /// Sorted by start, disjoint.
    pub spans: Vec<MaskSpan>,
    /// The placement attempts ran out before the budget was met.
    pub undershoot: bool,
}

impl MaskedPassage {
    pub fn masked_tokens(&self) -> usize {
        self.spans.iter().map(|s| s.len).sum()
    }
}

/// Choose spans covering ⌊ratio·n⌋ tokens. Each attempt draws a length from
/// Poisson(λ) (zeros redrawn, cut to the remaining budget) and a uniform start;
/// overlapping placements are rejected. After 100 rejections in a row the
/// passage is left short.
pub fn choose_spans<R: Rng>(n: usize, cfg: &PrereadConfig, rng: &mut R) -> Result<(Vec<MaskSpan>, bool)> {
    cfg.validate()?;
    let poisson = Poisson::new(cfg.poisson_lambda).map_err(|e| Error::invalid(e.to_string()))?;
    let budget = (cfg.mask_ratio * n as f64).floor() as usize;
    let mut covered = vec![false; n];
    let mut spans = Vec::new();
    let mut masked = 0;
    let mut undershoot = false;
    while masked < budget {
        let remaining = budget - masked;
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let len = loop {
                let l: f64 = poisson.sample(rng);
                if l >= 1.0 {
                    break (l as usize).min(remaining);
                }
            };
            let start = rng.random_range(0..=n - len);
            if covered[start..start + len].iter().any(|&c| c) {
                continue;
            }
            covered[start..start + len].fill(true);
            spans.push(MaskSpan { start, len });
            masked += len;
            placed = true;
            break;
        }
        if !placed {
            undershoot = true;
            break;
        }
    }
    spans.sort_by_key(|s| s.start);
    Ok((spans, undershoot))
}

pub fn apply_spans(tokens: &[String], spans: &[MaskSpan]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    for s in spans {
        out.extend_from_slice(&tokens[i..s.start]);
        out.push(MASK_TOKEN.to_string());
        i = s.start + s.len;
    }
    out.extend_from_slice(&tokens[i..]);
    out
}

/// Fill each sentinel with its original span. Returns `None` when the record
/// is inconsistent (sentinel count, bounds or overlap).
pub fn reconstruct(record: &MaskedPassage) -> Option<Vec<String>> {
    let mut out = Vec::with_capacity(record.original.len());
    let mut spans = record.spans.iter();
    let mut prev_end = 0;
    for t in &record.masked {
        if t == MASK_TOKEN {
            let s = spans.next()?;
            if s.len == 0 || s.start < prev_end || s.start + s.len > record.original.len() {
                return None;
            }
            out.extend_from_slice(&record.original[s.start..s.start + s.len]);
            prev_end = s.start + s.len;
        } else {
            out.push(t.clone());
        }
    }
    spans.next().is_none().then_some(out)
}

/// Mask one passage with its own RNG, seeded by (seed, book id, passage index).
pub fn mask_passage(book: &Book, passage: usize, cfg: &PrereadConfig) -> Result<MaskedPassage> {
    let original: Vec<String> = book.passage_tokens(passage).iter().map(|t| t.surface.clone()).collect();
    if original.is_empty() {
        return Err(Error::invalid(format!("book {} passage {passage} is empty", book.id)));
    }
    let mut rng = item_rng(
        cfg.seed,
        &[book.id.as_str().as_bytes(), &(passage as u64).to_le_bytes()],
    );
    let (spans, undershoot) = choose_spans(original.len(), cfg, &mut rng)?;
    Ok(MaskedPassage {
        book_id: book.id.clone(),
        passage,
        masked: apply_spans(&original, &spans),
        original,
        spans,
        undershoot,
    })
}

/// Passage pool over all books: every passage, or a seeded sample of
/// `pool_size` of them, kept in book then passage order.
pub fn preread_pool(books: &[Book], cfg: &PrereadConfig) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = books
        .iter()
        .enumerate()
        .flat_map(|(b, book)| (0..book.passages.len()).map(move |p| (b, p)))
        .collect();
    match cfg.pool_size {
        Some(cap) if cap < all.len() => {
            let mut rng = item_rng(cfg.seed, &[b"pool"]);
            let mut picked = sample(&mut rng, all.len(), cap).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i]).collect()
        }
        _ => all,
    }
}

pub fn preread_records(books: &[Book], cfg: &PrereadConfig) -> Result<Vec<MaskedPassage>> {
    cfg.validate()?;
    preread_pool(books, cfg)
        .into_par_iter()
        .filter(|&(b, p)| !books[b].passages[p].is_empty())
        .map(|(b, p)| mask_passage(&books[b], p, cfg))
        .collect()
}

/// One JSON record per line.
pub fn export_preread(books: &[Book], cfg: &PrereadConfig, path: &Path) -> Result<usize> {
    let records = preread_records(books, cfg)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in &records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BookKind;
    use proptest::prelude::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn zero_ratio_is_identity() {
        let book = Book::from_text("b", BookKind::Book, &words(50), 200);
        let cfg = PrereadConfig {
            mask_ratio: 0.0,
            ..Default::default()
        };
        let r = mask_passage(&book, 0, &cfg).unwrap();
        assert_eq!(r.masked, r.original);
        assert!(r.spans.is_empty());
    }

    #[test]
    fn budget_is_exact() {
        let book = Book::from_text("b", BookKind::Book, &words(200), 200);
        let cfg = PrereadConfig {
            seed: 13,
            ..Default::default()
        };
        let r = mask_passage(&book, 0, &cfg).unwrap();
        assert_eq!(r.masked_tokens(), 30);
        assert!(!r.undershoot);
        assert_eq!(r.masked.iter().filter(|t| *t == MASK_TOKEN).count(), r.spans.len());
    }

    #[test]
    fn pool_cap() {
        let books = vec![Book::from_text("b", BookKind::Book, &words(100), 10)];
        let all = preread_pool(
            &books,
            &PrereadConfig {
                pool_size: Some(100),
                ..Default::default()
            },
        );
        assert_eq!(all.len(), 10);
        let some = preread_pool(
            &books,
            &PrereadConfig {
                pool_size: Some(4),
                ..Default::default()
            },
        );
        assert_eq!(some.len(), 4);
        assert!(some.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_config() {
        assert!(PrereadConfig {
            mask_ratio: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PrereadConfig {
            poisson_lambda: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn reconstruction(n in 1usize..120, ratio in 0.0f64..1.0, seed in any::<u64>()) {
            let book = Book::from_text("b", BookKind::Book, &words(n), 200);
            let cfg = PrereadConfig { mask_ratio: ratio, seed, ..Default::default() };
            let r = mask_passage(&book, 0, &cfg).unwrap();
            prop_assert_eq!(reconstruct(&r).unwrap(), r.original.clone());
            let budget = (ratio * n as f64).floor() as usize;
            prop_assert!(r.masked_tokens() <= budget);
            if !r.undershoot {
                prop_assert_eq!(r.masked_tokens(), budget);
            }
        }
    }
}
