//! Image text, stem queries and reader contexts.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{AnswerSet, AnswerSetError};
use crate::stemming::{stems_of, Stem, StopWordPolicy};
use crate::verbalizer::FactSentence;

/// Default knowledge budget in whitespace tokens.
pub const DEFAULT_BUDGET: usize = 130;

/// One VQA record. The image itself is represented only by its caption and
/// OCR text.
#[derive(Debug, Clone, PartialEq)]
pub struct VqaExample {
    pub example_id: String,
    pub question: String,
    pub caption: String,
    pub ocr_text: String,
    pub answers: AnswerSet,
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("line {line}: duplicate example_id `{id}`")]
    DuplicateId { line: usize, id: String },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(serde_json::Number),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Text(s) => s,
            RawId::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAnswer {
    Plain(String),
    Counted(String, u32),
}

#[derive(Deserialize)]
struct RawExample {
    example_id: Option<RawId>,
    question: Option<String>,
    #[serde(default)]
    caption: String,
    #[serde(default)]
    ocr: String,
    #[serde(default)]
    answers: Vec<RawAnswer>,
}

impl VqaExample {
    /// Parses one dataset line. `answers` may be a list of raw annotator
    /// strings or a list of `[answer, count]` pairs (not mixed).
    pub fn from_json_line(line: &str) -> Result<Self, String> {
        let raw: RawExample = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let example_id = raw
            .example_id
            .ok_or("missing field `example_id`")?
            .into_string();
        let question = raw.question.ok_or("missing field `question`")?;
        if question.trim().is_empty() {
            return Err("question is empty".into());
        }
        let answers = if raw.answers.iter().all(|a| matches!(a, RawAnswer::Plain(_))) {
            AnswerSet::from_raw_answers(raw.answers.iter().map(|a| match a {
                RawAnswer::Plain(s) => s.as_str(),
                RawAnswer::Counted(..) => unreachable!(),
            }))
        } else if raw.answers.iter().all(|a| matches!(a, RawAnswer::Counted(..))) {
            let pairs = raw.answers.into_iter().map(|a| match a {
                RawAnswer::Counted(s, n) => (s, n),
                RawAnswer::Plain(_) => unreachable!(),
            });
            AnswerSet::from_pairs(pairs).map_err(|e: AnswerSetError| e.to_string())?
        } else {
            return Err("answers mix plain strings and [answer, count] pairs".into());
        };
        Ok(Self {
            example_id,
            question,
            caption: raw.caption,
            ocr_text: raw.ocr,
            answers,
        })
    }

    pub fn image_text(&self) -> ImageText {
        image_text(&self.ocr_text, &self.caption)
    }
}

/// Parses a JSON-lines dataset. All row errors are collected.
pub fn parse_dataset(text: &str) -> Result<Vec<VqaExample>, Vec<DatasetError>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match VqaExample::from_json_line(line) {
            Ok(ex) => {
                if !seen.insert(ex.example_id.clone()) {
                    errors.push(DatasetError::DuplicateId {
                        line: i + 1,
                        id: ex.example_id,
                    });
                } else {
                    out.push(ex);
                }
            }
            Err(message) => errors.push(DatasetError::Row { line: i + 1, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Textual stand-in for the image: OCR text followed by the caption.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageText {
    pub text: String,
}

pub fn image_text(ocr: &str, caption: &str) -> ImageText {
    let parts: Vec<&str> = [ocr.trim(), caption.trim()]
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect();
    ImageText {
        text: parts.join(" "),
    }
}

/// Ordered stem sequence used to score facts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StemQuery {
    pub stems: Vec<Stem>,
}

impl StemQuery {
    pub fn new(stems: Vec<Stem>) -> Self {
        Self { stems }
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }
}

/// Image-text stems with repeats removed (first occurrence wins), followed by
/// the question stems exactly as they occur.
pub fn build_stem_query(question: &str, image: &ImageText, policy: &StopWordPolicy) -> StemQuery {
    let mut seen = HashSet::new();
    let mut stems: Vec<Stem> = stems_of(&image.text, policy)
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .collect();
    stems.extend(stems_of(question, policy));
    StemQuery { stems }
}

/// The two encoder inputs of the reader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReaderContexts {
    pub background: String,
    pub knowledge: String,
    pub background_len: usize,
    pub knowledge_len: usize,
    pub facts_kept: usize,
    pub facts_dropped: usize,
}

impl ReaderContexts {
    /// Some facts were supplied but none fit in the budget.
    pub fn knowledge_starved(&self) -> bool {
        self.facts_kept == 0 && self.facts_dropped > 0
    }
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Builds `question: q context: v` and a single `fact:` block holding the
/// rank-ordered fact texts joined with `". "`. Whole facts are dropped from
/// the lowest rank until the knowledge block fits `budget` whitespace tokens.
/// The background is never truncated.
pub fn assemble_contexts(
    question: &str,
    image: &ImageText,
    facts: &[&FactSentence],
    budget: usize,
) -> ReaderContexts {
    let background = format!("question: {} context: {}", question.trim(), image.text)
        .trim_end()
        .to_owned();

    let mut keep = facts.len();
    let mut knowledge;
    loop {
        let texts: Vec<&str> = facts[..keep].iter().map(|f| f.text.as_str()).collect();
        knowledge = if texts.is_empty() {
            "fact:".to_owned()
        } else {
            format!("fact: {}", texts.join(". "))
        };
        if keep == 0 || token_count(&knowledge) <= budget {
            break;
        }
        keep -= 1;
    }

    ReaderContexts {
        background_len: token_count(&background),
        knowledge_len: token_count(&knowledge),
        background,
        knowledge,
        facts_kept: keep,
        facts_dropped: facts.len() - keep,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionMode {
    /// Background and knowledge encoded as one sequence.
    Joint,
    /// Background and knowledge encoded independently.
    Separate,
}

/// Number of token pairs an encoder's self-attention touches.
pub fn attention_pair_count(background_len: u32, knowledge_len: u32, mode: AttentionMode) -> u64 {
    let (b, k) = (u64::from(background_len), u64::from(knowledge_len));
    match mode {
        AttentionMode::Joint => (b + k) * (b + k),
        AttentionMode::Separate => b * b + k * k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;

    fn stems(words: &[&str]) -> Vec<Stem> {
        words.iter().map(|w| Stem::from_raw(*w)).collect()
    }

    fn fact(id: u32, text: &str) -> FactSentence {
        FactSentence::from_text(id, Triple::new("h", "r", "t"), text.to_owned(), &StopWordPolicy::empty())
    }

    #[test]
    fn image_text_order_and_empties() {
        assert_eq!(image_text("STOP", "a red sign").text, "STOP a red sign");
        assert_eq!(image_text("", "a dog").text, "a dog");
        assert_eq!(image_text("", "").text, "");
    }

    #[test]
    fn image_duplicates_removed_question_kept() {
        let p = StopWordPolicy::empty();
        let q = build_stem_query("dog", &ImageText { text: "dog dogs bone".into() }, &p);
        assert_eq!(q.stems, stems(&["dog", "bone", "dog"]));

        let q = build_stem_query("cat cats", &ImageText { text: "cat hat".into() }, &p);
        assert_eq!(q.stems, stems(&["cat", "hat", "cat", "cat"]));
    }

    #[test]
    fn empty_image_gives_question_stems() {
        let p = StopWordPolicy::empty();
        let q = build_stem_query("what color", &ImageText::default(), &p);
        assert_eq!(q.stems, stems_of("what color", &p));
    }

    #[test]
    fn contexts_without_facts() {
        let c = assemble_contexts("what is it", &ImageText { text: "a dog".into() }, &[], 130);
        assert_eq!(c.background, "question: what is it context: a dog");
        assert_eq!(c.knowledge, "fact:");
        assert!(!c.knowledge_starved());
    }

    #[test]
    fn contexts_keep_rank_order() {
        let (a, b) = (fact(7, "dog has part whiskers"), fact(2, "cat is a animal"));
        let c = assemble_contexts("q", &ImageText::default(), &[&a, &b], 130);
        assert_eq!(c.knowledge, "fact: dog has part whiskers. cat is a animal");
        assert_eq!(c.facts_kept, 2);
    }

    #[test]
    fn budget_drops_lowest_ranked_whole_facts() {
        let ten = "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10";
        let fs: Vec<_> = (0..3).map(|i| fact(i, ten)).collect();
        let refs: Vec<_> = fs.iter().collect();
        let c = assemble_contexts("q", &ImageText::default(), &refs, 25);
        assert_eq!(c.facts_kept, 2);
        assert_eq!(c.facts_dropped, 1);
        assert_eq!(c.knowledge_len, 21);

        let c = assemble_contexts("q", &ImageText::default(), &refs, 5);
        assert_eq!(c.knowledge, "fact:");
        assert!(c.knowledge_starved());
    }

    #[test]
    fn attention_costs() {
        assert_eq!(attention_pair_count(3, 4, AttentionMode::Joint), 49);
        assert_eq!(attention_pair_count(3, 4, AttentionMode::Separate), 25);
        assert_eq!(attention_pair_count(0, 9, AttentionMode::Joint), 81);
        assert_eq!(attention_pair_count(0, 9, AttentionMode::Separate), 81);
    }

    #[test]
    fn dataset_rows() {
        let ok = r#"{"example_id": 1, "question": "what?", "caption": "a dog", "ocr": "", "answers": ["dog","dog","puppy"]}"#;
        let ex = VqaExample::from_json_line(ok).unwrap();
        assert_eq!(ex.example_id, "1");
        assert_eq!(ex.answers.total(), 3);

        let pairs = r#"{"example_id": "x", "question": "q", "answers": [["in oven", 3], ["oven", 7]]}"#;
        let ex = VqaExample::from_json_line(pairs).unwrap();
        assert_eq!(ex.answers.len(), 2);

        let missing = r#"{"example_id": "x", "caption": "c", "answers": []}"#;
        assert!(VqaExample::from_json_line(missing).unwrap_err().contains("question"));

        let err = parse_dataset(&format!("{ok}\n{missing}\n{ok}\n")).unwrap_err();
        assert_eq!(err.len(), 2);
        assert!(matches!(err[0], DatasetError::Row { line: 2, .. }));
        assert!(matches!(err[1], DatasetError::DuplicateId { line: 3, .. }));
    }
}
