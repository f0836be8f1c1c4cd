use std::collections::HashMap;

use thiserror::Error;

use crate::stemming::normalize_text;

#[derive(Debug, Error, PartialEq)]
pub enum AnswerSetError {
    #[error("answer `{0}` has a zero annotator count")]
    ZeroCount(String),
    #[error("answer `{0}` listed twice")]
    Duplicate(String),
}

/// Ground-truth answers with the number of annotators who gave each one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnswerSet {
    answers: Vec<(String, u32)>,
    total: u32,
}

fn surface_key(answer: &str) -> String {
    normalize_text(answer).join(" ")
}

impl AnswerSet {
    /// Aggregates raw annotator answers. Answers that differ only in case,
    /// punctuation or spacing are merged under their first spelling.
    pub fn from_raw_answers<'a, I>(raw: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut answers: Vec<(String, u32)> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        let mut total = 0;
        for a in raw {
            total += 1;
            let key = surface_key(a);
            match slot.get(&key) {
                Some(&i) => answers[i].1 += 1,
                None => {
                    slot.insert(key, answers.len());
                    answers.push((a.trim().to_owned(), 1));
                }
            }
        }
        Self { answers, total }
    }

    /// Pre-aggregated `(answer, count)` pairs; the total is the count sum.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, AnswerSetError>
    where
        I: IntoIterator<Item = (String, u32)>,
    {
        let mut answers: Vec<(String, u32)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (a, n) in pairs {
            if n == 0 {
                return Err(AnswerSetError::ZeroCount(a));
            }
            if !seen.insert(surface_key(&a)) {
                return Err(AnswerSetError::Duplicate(a));
            }
            answers.push((a.trim().to_owned(), n));
        }
        let total = answers.iter().map(|(_, n)| n).sum();
        Ok(Self { answers, total })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.answers.iter().map(|(a, n)| (a.as_str(), *n))
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    /// Number of annotators.
    pub fn total(&self) -> u32 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_answers_are_counted() {
        let s = AnswerSet::from_raw_answers(["dog", "Dog", "puppy", "dog."]);
        let v: Vec<_> = s.iter().collect();
        assert_eq!(v, [("dog", 3), ("puppy", 1)]);
        assert_eq!(s.total(), 4);
    }

    #[test]
    fn pairs_validated() {
        let ok = AnswerSet::from_pairs([("oven".to_string(), 7), ("in oven".to_string(), 3)]).unwrap();
        assert_eq!(ok.total(), 10);
        assert!(AnswerSet::from_pairs([("x".to_string(), 0)]).is_err());
        assert!(AnswerSet::from_pairs([("x".to_string(), 1), ("X".to_string(), 2)]).is_err());
    }
}
