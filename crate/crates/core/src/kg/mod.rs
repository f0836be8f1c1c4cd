//! Knowledge-graph triples and the construction pipeline: per-source
//! ingestion, VQA-corpus filtering and frequent-relation deduplication.

mod ingest;
mod pipeline;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

pub use ingest::{ingest_source, parse_snapshot_tsv, IngestError, RowError, SourceSpec};
pub use pipeline::{
    compute_relation_frequencies, dedup_frequent_relations, filter_by_corpus, kg_stats,
    KgSnapshot, RelationStats, DEFAULT_FREQUENT_THRESHOLD,
};

/// One (head, relation, tail) fact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub source: String,
    pub confidence: Option<f64>,
}

impl Triple {
    pub fn new(head: &str, relation: &str, tail: &str) -> Self {
        Self {
            head: collapse_ws(head),
            relation: collapse_ws(relation),
            tail: collapse_ws(tail),
            source: String::new(),
            confidence: None,
        }
    }

    pub fn with_source(mut self, source: &str) -> Self {
        self.source = source.to_owned();
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = Some(confidence);
        self
    }

    pub fn head_key(&self) -> String {
        entity_key(&self.head)
    }

    pub fn tail_key(&self) -> String {
        entity_key(&self.tail)
    }
}

pub(crate) fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Entity identity: lowercase with whitespace runs collapsed.
pub fn entity_key(s: &str) -> String {
    collapse_ws(&s.to_lowercase())
}

/// `head<TAB>relation<TAB>tail[<TAB>confidence]` lines.
pub fn triples_to_tsv(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = write!(out, "{}\t{}\t{}", t.head, t.relation, t.tail);
        if let Some(c) = t.confidence {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
    }
    out
}

pub(crate) fn distinct_entities(triples: &[Triple]) -> BTreeSet<String> {
    triples
        .iter()
        .flat_map(|t| [t.head_key(), t.tail_key()])
        .collect()
}
