//! Triple-to-sentence rendering with manual and automatic cloze templates.

mod segment;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::kg::{KgSnapshot, Triple};
use crate::stemming::{normalize_text, stems_of, Stem, StopWordPolicy};

pub use segment::{segment_relation, Dictionary, DEFAULT_DICTIONARY};

/// The bundled manual templates, in template-file format.
pub const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.tsv");

const HEAD_SLOT: &str = "{head}";
const TAIL_SLOT: &str = "{tail}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactId(pub u32);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("pattern `{0}` must contain `{{head}}` and `{{tail}}` exactly once each")]
    BadSlots(String),
    #[error("line {line}: expected `relation<TAB>pattern`")]
    Malformed { line: usize },
    #[error("line {line}: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: Box<TemplateError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateOrigin {
    Manual,
    Auto,
}

/// A cloze pattern with one `{head}` and one `{tail}` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub relation: String,
    pub origin: TemplateOrigin,
    pattern: String,
    // literal text around the two slots, and whether head comes first
    parts: [String; 3],
    head_first: bool,
}

impl Template {
    pub fn new(relation: &str, pattern: &str, origin: TemplateOrigin) -> Result<Self, TemplateError> {
        let bad = || TemplateError::BadSlots(pattern.to_owned());
        if pattern.matches(HEAD_SLOT).count() != 1 || pattern.matches(TAIL_SLOT).count() != 1 {
            return Err(bad());
        }
        let h = pattern.find(HEAD_SLOT).ok_or_else(bad)?;
        let t = pattern.find(TAIL_SLOT).ok_or_else(bad)?;
        let head_first = h < t;
        let (first, first_len, second, second_len) = if head_first {
            (h, HEAD_SLOT.len(), t, TAIL_SLOT.len())
        } else {
            (t, TAIL_SLOT.len(), h, HEAD_SLOT.len())
        };
        let parts = [
            pattern[..first].to_owned(),
            pattern[first + first_len..second].to_owned(),
            pattern[second + second_len..].to_owned(),
        ];
        Ok(Self {
            relation: relation.to_owned(),
            origin,
            pattern: pattern.to_owned(),
            parts,
            head_first,
        })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    /// Substitutes the slots in one pass; slot markers inside `head` or
    /// `tail` are left alone.
    pub fn render(&self, head: &str, tail: &str) -> String {
        let (a, b) = if self.head_first { (head, tail) } else { (tail, head) };
        let mut out = String::with_capacity(self.pattern.len() + head.len() + tail.len());
        out.push_str(&self.parts[0]);
        out.push_str(a);
        out.push_str(&self.parts[1]);
        out.push_str(b);
        out.push_str(&self.parts[2]);
        out
    }
}

/// `{head} <relation words> {tail}`.
pub fn auto_template(relation: &str, dictionary: &Dictionary) -> Template {
    let words = segment_relation(relation, dictionary);
    let pattern = if words.is_empty() {
        format!("{HEAD_SLOT} {TAIL_SLOT}")
    } else {
        format!("{HEAD_SLOT} {} {TAIL_SLOT}", words.join(" "))
    };
    Template::new(relation, &pattern, TemplateOrigin::Auto).expect("generated pattern has both slots")
}

/// Resolves every relation to a template: a manual one when registered,
/// otherwise one generated from the relation name.
#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    manual: BTreeMap<String, Template>,
    dictionary: Dictionary,
}

impl TemplateRegistry {
    pub fn new(dictionary: Dictionary) -> Self {
        Self {
            manual: BTreeMap::new(),
            dictionary,
        }
    }

    /// Bundled dictionary and bundled manual templates.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new(Dictionary::parse(DEFAULT_DICTIONARY));
        reg.load_tsv(DEFAULT_TEMPLATES)
            .expect("bundled templates are valid");
        reg
    }

    /// Key under which manual templates are stored, so that `AtLocation`,
    /// `atlocation` and `at_location` share one entry.
    fn key(&self, relation: &str) -> String {
        segment_relation(relation, &self.dictionary).join("_")
    }

    pub fn insert_manual(&mut self, relation: &str, pattern: &str) -> Result<(), TemplateError> {
        let template = Template::new(relation, pattern, TemplateOrigin::Manual)?;
        self.manual.insert(self.key(relation), template);
        Ok(())
    }

    /// Reads `relation<TAB>pattern` lines; `#` comments and blank lines are skipped.
    pub fn load_tsv(&mut self, text: &str) -> Result<(), TemplateError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (rel, pattern) = line
                .split_once('\t')
                .ok_or(TemplateError::Malformed { line: i + 1 })?;
            self.insert_manual(rel.trim(), pattern.trim())
                .map_err(|e| TemplateError::Pattern {
                    line: i + 1,
                    source: Box::new(e),
                })?;
        }
        Ok(())
    }

    pub fn resolve(&self, relation: &str) -> Template {
        match self.manual.get(&self.key(relation)) {
            Some(t) => t.clone(),
            None => auto_template(relation, &self.dictionary),
        }
    }

    pub fn manual_count(&self) -> usize {
        self.manual.len()
    }
}

/// A verbalized triple, the unit of indexing and retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct FactSentence {
    pub fact_id: FactId,
    pub triple: Triple,
    pub text: String,
    /// Stems of the text in order, duplicates included.
    pub stem_tokens: Vec<Stem>,
    /// Token count of the normalized text.
    pub length: usize,
}

impl FactSentence {
    pub fn from_text(fact_id: u32, triple: Triple, text: String, policy: &StopWordPolicy) -> Self {
        Self {
            fact_id: FactId(fact_id),
            stem_tokens: stems_of(&text, policy),
            length: normalize_text(&text).len(),
            triple,
            text,
        }
    }

    pub fn stem_set(&self) -> std::collections::BTreeSet<&Stem> {
        self.stem_tokens.iter().collect()
    }
}

pub fn verbalize(
    triple: &Triple,
    fact_id: u32,
    registry: &TemplateRegistry,
    policy: &StopWordPolicy,
) -> FactSentence {
    let text = registry
        .resolve(&triple.relation)
        .render(&triple.head, &triple.tail);
    FactSentence::from_text(fact_id, triple.clone(), text, policy)
}

/// One sentence per triple; ids follow input position from 0.
pub fn build_fact_corpus(
    kg: &KgSnapshot,
    registry: &TemplateRegistry,
    policy: &StopWordPolicy,
    exec: Execution,
) -> Vec<FactSentence> {
    exec.map_indexed(&kg.triples, |i, t| verbalize(t, i as u32, registry, policy))
}

#[derive(Debug, Error, PartialEq)]
pub enum FactCorpusError {
    #[error("line {line}: expected `fact_id<TAB>head<TAB>relation<TAB>tail<TAB>text`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate fact_id {id}")]
    DuplicateId { line: usize, id: u32 },
}

/// `fact_id<TAB>head<TAB>relation<TAB>tail<TAB>text` lines.
pub fn fact_corpus_to_tsv(facts: &[FactSentence]) -> String {
    let mut out = String::new();
    for f in facts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            f.fact_id, f.triple.head, f.triple.relation, f.triple.tail, f.text
        );
    }
    out
}

pub fn parse_fact_corpus(text: &str, policy: &StopWordPolicy) -> Result<Vec<FactSentence>, FactCorpusError> {
    let mut seen = std::collections::HashSet::new();
    let mut facts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = FactCorpusError::Malformed { line: i + 1 };
        let fields: Vec<&str> = line.splitn(5, '\t').collect();
        let [id, head, rel, tail, sentence] = fields[..] else {
            return Err(malformed);
        };
        let id: u32 = id.parse().map_err(|_| malformed)?;
        if !seen.insert(id) {
            return Err(FactCorpusError::DuplicateId { line: i + 1, id });
        }
        facts.push(FactSentence::from_text(
            id,
            Triple::new(head, rel, tail),
            sentence.to_owned(),
            policy,
        ));
    }
    Ok(facts)
}
