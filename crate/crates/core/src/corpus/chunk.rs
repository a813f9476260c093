use super::{BookId, Passage};

pub const DEFAULT_CHUNK_SIZE: usize = 200;

/// Greedy left-to-right partition of `token_count` tokens into passages of
/// `chunk_size` tokens; the last passage holds the remainder.
///
/// A `chunk_size` of zero is treated as one.
pub fn chunk_book(book_id: &BookId, token_count: usize, chunk_size: usize) -> Vec<Passage> {
    let size = chunk_size.max(1);
    (0..token_count)
        .step_by(size)
        .enumerate()
        .map(|(index, start)| Passage {
            book_id: book_id.clone(),
            index,
            start,
            end: (start + size).min(token_count),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lengths(n: usize, size: usize) -> Vec<usize> {
        chunk_book(&BookId::from("b"), n, size)
            .iter()
            .map(Passage::len)
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(lengths(450, 200), [200, 200, 50]);
        assert_eq!(lengths(400, 200), [200, 200]);
        assert!(lengths(0, 200).is_empty());
        assert_eq!(lengths(3, 1), [1, 1, 1]);
    }

    proptest! {
        #[test]
        fn partitions_in_order(n in 0usize..2000, size in 1usize..300) {
            let ps = chunk_book(&BookId::from("b"), n, size);
            let mut next = 0;
            for (i, p) in ps.iter().enumerate() {
                prop_assert_eq!(p.index, i);
                prop_assert_eq!(p.start, next);
                prop_assert!(!p.is_empty() && p.len() <= size);
                if i + 1 < ps.len() {
                    prop_assert_eq!(p.len(), size);
                }
                next = p.end;
            }
            prop_assert_eq!(next, n);
        }
    }
}
