//! Stems, text normalization, stop-word policy and the VQA stem corpus.

mod corpus;
mod porter;
mod stopwords;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use corpus::{build_vqa_corpus, CorpusError, VqaCorpus};
pub use porter::porter_stem;
pub use stopwords::{StopWordPolicy, DEFAULT_STOPWORDS};
pub use text::normalize_text;

/// A single-pass Porter stem. Never re-stemmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stem(String);

impl Stem {
    /// Stems one normalized token.
    pub fn of(word: &str) -> Self {
        Stem(porter_stem(word))
    }

    /// Wraps a string that is already a stem (e.g. read back from a corpus file).
    pub fn from_raw(value: impl Into<String>) -> Self {
        Stem(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Stem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for Stem {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Normalizes `text`, drops removable stop words and stems the survivors.
/// Order and duplicates are preserved.
pub fn stems_of(text: &str, policy: &StopWordPolicy) -> Vec<Stem> {
    normalize_text(text)
        .into_iter()
        .filter(|t| !policy.removes(t))
        .map(|t| Stem::of(&t))
        .collect()
}

/// Stems of every token, no stop-word removal.
pub fn all_stems(text: &str) -> Vec<Stem> {
    normalize_text(text).iter().map(|t| Stem::of(t)).collect()
}
