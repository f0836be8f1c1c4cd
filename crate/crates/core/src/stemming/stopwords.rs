use std::collections::BTreeSet;

/// The bundled stop-word list, in policy-file format.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Which normalized tokens are dropped before stemming.
///
/// A word is removed only when it is in the stop set and not in the keep set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWordPolicy {
    stop_set: BTreeSet<String>,
    keep_set: BTreeSet<String>,
}

impl StopWordPolicy {
    pub fn new<S, K>(stop: S, keep: K) -> Self
    where
        S: IntoIterator,
        S::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        Self {
            stop_set: stop.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            keep_set: keep.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    /// A policy that removes nothing.
    pub fn empty() -> Self {
        Self::new(Vec::<String>::new(), Vec::<String>::new())
    }

    /// Parses the policy-file format: one word per line, `+word` for keep-set
    /// entries, blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        let mut stop = Vec::new();
        let mut keep = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.strip_prefix('+') {
                Some(word) => keep.push(word.trim().to_owned()),
                None => stop.push(line.to_owned()),
            }
        }
        Self::new(stop, keep)
    }

    pub fn removes(&self, word: &str) -> bool {
        self.stop_set.contains(word) && !self.keep_set.contains(word)
    }

    pub fn stop_set(&self) -> &BTreeSet<String> {
        &self.stop_set
    }

    pub fn keep_set(&self) -> &BTreeSet<String> {
        &self.keep_set
    }
}

impl Default for StopWordPolicy {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}
