use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{stems_of, Stem, StopWordPolicy};
use crate::exec::Execution;
use crate::query::VqaExample;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: expected `stem<TAB>frequency`")]
    Malformed { line: usize },
    #[error("line {line}: frequency must be a positive integer")]
    BadFrequency { line: usize },
    #[error("line {line}: duplicate stem `{stem}`")]
    Duplicate { line: usize, stem: String },
}

/// Stem lexicon of a VQA dataset with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VqaCorpus {
    freq: BTreeMap<Stem, u64>,
}

impl VqaCorpus {
    pub fn from_counts(freq: BTreeMap<Stem, u64>) -> Self {
        let freq = freq.into_iter().filter(|(_, n)| *n > 0).collect();
        Self { freq }
    }

    pub fn contains(&self, stem: &Stem) -> bool {
        self.freq.contains_key(stem)
    }

    pub fn frequency(&self, stem: &str) -> u64 {
        self.freq.get(stem).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Stem, u64)> {
        self.freq.iter().map(|(s, n)| (s, *n))
    }

    /// Entries by descending frequency, then stem.
    pub fn ranked(&self) -> Vec<(&Stem, u64)> {
        let mut rows: Vec<_> = self.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }

    /// `stem<TAB>frequency` lines in ranked order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (stem, n) in self.ranked() {
            let _ = writeln!(out, "{stem}\t{n}");
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self, CorpusError> {
        let mut freq = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (stem, count) = line
                .split_once('\t')
                .ok_or(CorpusError::Malformed { line: line_no })?;
            let count: u64 = count
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or(CorpusError::BadFrequency { line: line_no })?;
            let stem = stem.trim();
            if stem.is_empty() {
                return Err(CorpusError::Malformed { line: line_no });
            }
            if freq.insert(Stem::from_raw(stem), count).is_some() {
                return Err(CorpusError::Duplicate {
                    line: line_no,
                    stem: stem.to_owned(),
                });
            }
        }
        Ok(Self { freq })
    }
}

/// Every text field of an example that feeds the corpus: question, each
/// distinct answer, caption and OCR text.
fn example_stems(ex: &VqaExample, policy: &StopWordPolicy) -> Vec<Stem> {
    let mut stems = stems_of(&ex.question, policy);
    for (answer, _) in ex.answers.iter() {
        stems.extend(stems_of(answer, policy));
    }
    stems.extend(stems_of(&ex.caption, policy));
    stems.extend(stems_of(&ex.ocr_text, policy));
    stems
}

/// Counts stems over questions, answers, captions and OCR text of a dataset.
pub fn build_vqa_corpus(
    dataset: &[VqaExample],
    policy: &StopWordPolicy,
    exec: Execution,
) -> VqaCorpus {
    let per_example = exec.map(dataset, |ex| example_stems(ex, policy));
    let mut freq = BTreeMap::new();
    for stems in per_example {
        for s in stems {
            *freq.entry(s).or_insert(0u64) += 1;
        }
    }
    VqaCorpus { freq }
}
