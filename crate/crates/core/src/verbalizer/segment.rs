use std::collections::HashSet;

/// The bundled word list used to split fused relation names.
pub const DEFAULT_DICTIONARY: &str = include_str!("../../data/relation_words.txt");

/// Lowercase word list for greedy longest-match segmentation.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
    longest: usize,
}

impl Dictionary {
    pub fn new<I>(words: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .collect();
        let longest = words.iter().map(|w| w.chars().count()).max().unwrap_or(0);
        Self { words, longest }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(text.lines())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Length in chars of the longest dictionary word starting `chars`.
    fn longest_prefix(&self, chars: &[char]) -> Option<usize> {
        let max = self.longest.min(chars.len());
        (1..=max).rev().find(|&n| {
            let candidate: String = chars[..n].iter().collect();
            self.words.contains(&candidate)
        })
    }
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

/// Splits on separators (`_`, `-`, `/`, whitespace, other punctuation) and at
/// camel-case boundaries.
fn split_chunks(relation: &str) -> Vec<String> {
    let chars: Vec<char> = relation.chars().collect();
    let mut chunks = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                chunks.push(std::mem::take(&mut current));
            }
            continue;
        }
        if c.is_uppercase() && !current.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // fooBar | FOOBar -> FOO Bar
            if prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_lower) {
                chunks.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Greedy longest-match split of one chunk. `None` when some letters are
/// not covered by dictionary words.
fn greedy_cover(chars: &[char], dictionary: &Dictionary) -> Option<Vec<String>> {
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let n = dictionary.longest_prefix(&chars[i..])?;
        pieces.push(chars[i..i + n].iter().collect());
        i += n;
    }
    Some(pieces)
}

fn segment_chunk(chunk: &str, dictionary: &Dictionary, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    match greedy_cover(&chars, dictionary) {
        Some(pieces) => out.extend(pieces),
        // unmatched residue: keep the chunk as written
        None => out.push(chunk.to_owned()),
    }
}

/// Breaks a relation name into lowercase words: separators and camel case
/// first, then greedy longest-match over the dictionary. A chunk the
/// dictionary cannot cover completely is kept whole.
pub fn segment_relation(relation: &str, dictionary: &Dictionary) -> Vec<String> {
    let mut pieces = Vec::new();
    for chunk in split_chunks(relation) {
        segment_chunk(&chunk, dictionary, &mut pieces);
    }
    pieces
}
