//! Binary index files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes  "BQIX"
//! version      u32      currently 1
//! k1, b        f64, f64
//! book id      u32 byte length, UTF-8 bytes
//! passages     u32 count, then one u32 length (indexed terms) per passage
//! terms        u32 count, then per term in byte order:
//!                u32 byte length, UTF-8 bytes,
//!                u32 posting count, then (u32 passage, u32 tf) pairs
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Bm25Index, Bm25Params, Posting};
use crate::corpus::BookId;
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"BQIX";
pub const INDEX_VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

impl Bm25Index {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(INDEX_MAGIC);
        put_u32(&mut buf, INDEX_VERSION);
        buf.extend_from_slice(&self.params.k1.to_le_bytes());
        buf.extend_from_slice(&self.params.b.to_le_bytes());
        put_str(&mut buf, self.book_id.as_str());
        put_u32(&mut buf, self.passage_lengths.len() as u32);
        for &l in &self.passage_lengths {
            put_u32(&mut buf, l);
        }
        put_u32(&mut buf, self.postings.len() as u32);
        for (term, ps) in &self.postings {
            put_str(&mut buf, term);
            put_u32(&mut buf, ps.len() as u32);
            for p in ps {
                put_u32(&mut buf, p.passage);
                put_u32(&mut buf, p.tf);
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Bm25Index, String> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != INDEX_MAGIC {
            return Err("bad magic bytes".into());
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let k1 = r.f64()?;
        let b = r.f64()?;
        let book_id = BookId(r.string()?);
        let n = r.u32()? as usize;
        let lengths = (0..n).map(|_| r.u32()).collect::<std::result::Result<Vec<_>, _>>()?;
        let n_terms = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = r.string()?;
            let count = r.u32()? as usize;
            let mut ps = Vec::with_capacity(count);
            for _ in 0..count {
                let passage = r.u32()?;
                if passage as usize >= n {
                    return Err(format!("posting for {term:?} references passage {passage} of {n}"));
                }
                ps.push(Posting { passage, tf: r.u32()? });
            }
            postings.insert(term, ps);
        }
        if r.pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - r.pos));
        }
        Ok(Bm25Index::from_parts(book_id, Bm25Params { k1, b }, postings, lengths))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| e.to_string())
    }
}

pub fn write_index(index: &Bm25Index, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&index.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_index(path: &Path) -> Result<Bm25Index> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Bm25Index::from_bytes(&bytes).map_err(|message| Error::IndexFormat {
        path: path.to_path_buf(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Book, BookKind};
    use crate::index::build_index;

    fn sample() -> Bm25Index {
        let b = Book::from_text("bk", BookKind::Book, "The whale swam. The ship sailed on, far away!", 4);
        build_index(&b, Bm25Params::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let idx = sample();
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..4], INDEX_MAGIC);
        assert_eq!(Bm25Index::from_bytes(&bytes).unwrap(), idx);
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(sample().to_bytes(), sample().to_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes();
        assert!(Bm25Index::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Bm25Index::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Bm25Index::from_bytes(&extra).is_err());
    }

    #[test]
    fn file_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bk.bqix");
        let idx = sample();
        write_index(&idx, &path).unwrap();
        assert_eq!(read_index(&path).unwrap(), idx);
        assert!(matches!(read_index(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
