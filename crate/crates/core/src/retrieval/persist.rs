//! Versioned little-endian container for [`Bm25Index`].
//!
//! ```text
//! magic[8] version:u32
//! k1:f64 b:f64 avg_doc_len:f64
//! n_docs:u32 { fact_id:u32 doc_len:u32 } * n_docs
//! n_stems:u32 { len:u32 utf8[len] n_postings:u32 { doc:u32 tf:u32 } * n_postings } * n_stems
//! crc32:u32   (over every preceding byte)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::index::{mean_len, Bm25Index, Bm25Params, Posting};
use crate::stemming::Stem;
use crate::verbalizer::FactId;

pub const MAGIC: [u8; 8] = *b"KGBM25IX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("index file is truncated")]
    Truncated,
    #[error("index checksum mismatch")]
    Checksum,
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
}

impl PersistError {
    /// Bad magic or an unknown version.
    pub fn is_version_error(&self) -> bool {
        matches!(self, PersistError::BadMagic | PersistError::UnsupportedVersion { .. })
    }
}

pub fn encode(index: &Bm25Index) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&index.params.k1.to_le_bytes());
    out.extend_from_slice(&index.params.b.to_le_bytes());
    out.extend_from_slice(&index.avg_doc_len.to_le_bytes());
    out.extend_from_slice(&(index.fact_ids.len() as u32).to_le_bytes());
    for (id, len) in index.fact_ids.iter().zip(&index.doc_lens) {
        out.extend_from_slice(&id.0.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
    }
    out.extend_from_slice(&(index.postings.len() as u32).to_le_bytes());
    for (stem, list) in &index.postings {
        let bytes = stem.as_str().as_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(bytes);
        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
        for p in list {
            out.extend_from_slice(&p.doc.to_le_bytes());
            out.extend_from_slice(&p.tf.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.pos.checked_add(n).ok_or(PersistError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(PersistError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Bm25Index, PersistError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) {
            PersistError::Truncated
        } else {
            PersistError::BadMagic
        });
    }
    if bytes[..MAGIC.len()] != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let mut header = Reader { buf: bytes, pos: MAGIC.len() };
    let version = header.u32()?;
    if version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion { found: version });
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(PersistError::Truncated);
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    let mut r = Reader { buf: body, pos: MAGIC.len() + 4 };

    // Parse before checking the checksum so a short file reports truncation.
    let k1 = r.f64()?;
    let b = r.f64()?;
    let avg_doc_len = r.f64()?;
    let n_docs = r.u32()? as usize;
    let mut fact_ids = Vec::with_capacity(n_docs.min(body.len() / 8));
    let mut doc_lens = Vec::with_capacity(n_docs.min(body.len() / 8));
    for _ in 0..n_docs {
        fact_ids.push(FactId(r.u32()?));
        doc_lens.push(r.u32()?);
    }
    let n_stems = r.u32()? as usize;
    let mut postings = BTreeMap::new();
    for _ in 0..n_stems {
        let len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(len)?).map_err(|_| PersistError::Corrupt("stem is not utf-8"))?;
        let n = r.u32()? as usize;
        let mut list = Vec::with_capacity(n.min(n_docs));
        for _ in 0..n {
            list.push(Posting { doc: r.u32()?, tf: r.u32()? });
        }
        if postings.insert(Stem::from_raw(text), list).is_some() {
            return Err(PersistError::Corrupt("duplicate stem"));
        }
    }
    if r.pos != body.len() {
        return Err(if crc32fast::hash(body) == u32::from_le_bytes(crc.try_into().unwrap()) {
            PersistError::Corrupt("trailing bytes")
        } else {
            PersistError::Truncated
        });
    }
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(PersistError::Checksum);
    }

    if fact_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PersistError::Corrupt("fact ids not strictly increasing"));
    }
    for list in postings.values() {
        if list.is_empty() || list.len() > n_docs {
            return Err(PersistError::Corrupt("postings length out of range"));
        }
        if list.iter().any(|p| p.tf == 0 || p.doc as usize >= n_docs)
            || list.windows(2).any(|w| w[0].doc >= w[1].doc)
        {
            return Err(PersistError::Corrupt("bad posting"));
        }
    }
    if mean_len(&doc_lens).to_bits() != avg_doc_len.to_bits() {
        return Err(PersistError::Corrupt("average length does not match document lengths"));
    }
    let params = Bm25Params { k1, b }
        .validate()
        .map_err(|_| PersistError::Corrupt("invalid BM25 parameters"))?;

    Ok(Bm25Index {
        params,
        fact_ids,
        doc_lens,
        postings,
        avg_doc_len,
    })
}

pub fn save_index(index: &Bm25Index, path: &Path) -> Result<(), PersistError> {
    fs::write(path, encode(index))?;
    Ok(())
}

/// Loads an index written by [`save_index`]. Either the whole index loads or
/// an error is returned.
pub fn load_index(path: &Path) -> Result<Bm25Index, PersistError> {
    decode(&fs::read(path)?)
}
