//! Stem-keyed inverted index with BM25 scoring over fact sentences.
//!
//! ```text
//! score(Q, f) = sum over query stems s (with repeats) of idf(s) * R(s, f)
//! idf(s)      = ln((N - n(s) + 0.5) / (n(s) + 0.5))
//! R(s, f)     = tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(f) / avg_len))
//! ```
//!
//! IDF is not floored at zero: stems present in more than half of the facts
//! get negative weight.

mod dump;
mod index;
mod persist;

pub use dump::{parse_dump, RetrievalRow};
pub use index::{Bm25Index, Bm25Params, IndexError, Posting, RetrievalResult};
pub use persist::{
    decode as decode_index, encode as encode_index, load_index, save_index, PersistError, FORMAT_VERSION, MAGIC,
};

/// Default number of facts returned per query.
pub const DEFAULT_TOP_K: usize = 10;

/// The per-term BM25 saturation factor.
#[inline]
pub fn bm25_term(tf: u32, doc_len: u32, avg_doc_len: f64, k1: f64, b: f64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = f64::from(tf);
    let norm = 1.0 - b + b * f64::from(doc_len) / avg_doc_len;
    tf * (k1 + 1.0) / (tf + k1 * norm)
}

/// `ln((N - n + 0.5) / (n + 0.5))`
#[inline]
pub fn idf_value(n_docs: usize, doc_freq: usize) -> f64 {
    let n = n_docs as f64;
    let df = doc_freq as f64;
    ((n - df + 0.5) / (df + 0.5)).ln()
}
