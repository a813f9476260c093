//! Longest-common-subsequence lengths.

/// Classic O(|a|·|b|) dynamic program, keeping one row.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Longest pattern accepted by [`BitLcs`].
pub const MAX_BIT_PATTERN: usize = 64;

/// Bit-parallel LCS against a fixed pattern of at most 64 elements.
///
/// Each text element is supplied as a match mask (bit `j` set when the
/// element equals `pattern[j]`), so the cost per text element is a handful of
/// word operations regardless of the pattern length.
#[derive(Debug, Clone, Copy)]
pub struct BitLcs {
    len: usize,
    low_mask: u64,
}

impl BitLcs {
    pub fn new(pattern_len: usize) -> Option<BitLcs> {
        if pattern_len == 0 || pattern_len > MAX_BIT_PATTERN {
            return None;
        }
        let low_mask = if pattern_len == 64 {
            u64::MAX
        } else {
            (1u64 << pattern_len) - 1
        };
        Some(BitLcs {
            len: pattern_len,
            low_mask,
        })
    }

    pub fn match_mask<T: PartialEq>(pattern: &[T], item: &T) -> u64 {
        pattern
            .iter()
            .enumerate()
            .filter(|(_, p)| *p == item)
            .fold(0u64, |m, (j, _)| m | (1u64 << j))
    }

    /// LCS length between the pattern and the text described by `masks`.
    pub fn run(&self, masks: &[u64]) -> usize {
        let mut v = u64::MAX;
        for &m in masks {
            let u = v & m;
            v = v.wrapping_add(u) | (v - u);
        }
        self.len - (v & self.low_mask).count_ones() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        assert_eq!(lcs_len(b"abcbdab", b"bdcaba"), 4);
        assert_eq!(lcs_len::<u8>(b"", b"abc"), 0);
        assert_eq!(lcs_len(b"abc", b"abc"), 3);
        assert_eq!(lcs_len(b"abc", b"xyz"), 0);
    }

    fn bit_lcs(text: &[u8], pattern: &[u8]) -> usize {
        let masks: Vec<u64> = text.iter().map(|x| BitLcs::match_mask(pattern, x)).collect();
        BitLcs::new(pattern.len()).unwrap().run(&masks)
    }

    #[test]
    fn bit_parallel_examples() {
        assert_eq!(bit_lcs(b"abcbdab", b"bdcaba"), 4);
        assert_eq!(bit_lcs(b"", b"ab"), 0);
        let long: Vec<u8> = (0..64).map(|i| (i % 7) as u8).collect();
        assert_eq!(bit_lcs(&long, &long), 64);
    }

    proptest! {
        #[test]
        fn bit_parallel_matches_dp(
            text in proptest::collection::vec(0u8..5, 0..80),
            pattern in proptest::collection::vec(0u8..5, 1..=64),
        ) {
            prop_assert_eq!(bit_lcs(&text, &pattern), lcs_len(&text, &pattern));
        }
    }
}
