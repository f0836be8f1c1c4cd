use std::collections::BTreeSet;
use std::num::NonZeroUsize;

use thiserror::Error;

use super::Triple;

/// Per-source ingestion rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub id: String,
    pub path: std::path::PathBuf,
    /// Rows must carry a fourth `confidence` column.
    pub has_confidence: bool,
    /// Keep only the N most confident rows (after blocklisting).
    pub max_triples_by_confidence: Option<NonZeroUsize>,
    pub relation_blocklist: BTreeSet<String>,
}

impl SourceSpec {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_owned(),
            path: Default::default(),
            has_confidence: false,
            max_triples_by_confidence: None,
            relation_blocklist: BTreeSet::new(),
        }
    }

    /// Blocklist entries match relations case-insensitively.
    pub fn blocks(&self, relation: &str) -> bool {
        self.relation_blocklist
            .iter()
            .any(|r| r.eq_ignore_ascii_case(relation))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{source_id}:{line}: {message}")]
pub struct RowError {
    pub source_id: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("{} malformed row(s) in source `{source_id}`, first: {}", .rows.len(), .rows[0])]
    MalformedRows { source_id: String, rows: Vec<RowError> },
}

fn parse_row(line: &str, require_confidence: bool) -> Result<(Triple, Option<f64>), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 tab-separated fields, found {}", fields.len()));
    }
    let names = ["head", "relation", "tail"];
    for (name, value) in names.iter().zip(&fields) {
        if value.trim().is_empty() {
            return Err(format!("empty {name}"));
        }
    }
    let confidence = match fields.get(3).map(|s| s.trim()) {
        Some(c) if !c.is_empty() => {
            let v: f64 = c.parse().map_err(|_| format!("confidence `{c}` is not a number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("confidence {v} outside [0, 1]"));
            }
            Some(v)
        }
        _ => None,
    };
    if require_confidence && confidence.is_none() {
        return Err("missing confidence".into());
    }
    Ok((Triple::new(fields[0], fields[1], fields[2]), confidence))
}

/// Parses a source's rows, drops blocklisted relations and applies the
/// confidence cap. Survivors keep their input order. Malformed rows are all
/// collected into one error.
pub fn ingest_source<'a, I>(spec: &SourceSpec, lines: I) -> Result<Vec<Triple>, IngestError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in lines.into_iter().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        match parse_row(line, spec.has_confidence) {
            Ok((mut t, conf)) => {
                if spec.blocks(&t.relation) {
                    continue;
                }
                t.source = spec.id.clone();
                t.confidence = conf;
                rows.push(t);
            }
            Err(message) => errors.push(RowError {
                source_id: spec.id.clone(),
                line: i + 1,
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(IngestError::MalformedRows {
            source_id: spec.id.clone(),
            rows: errors,
        });
    }

    if let Some(cap) = spec.max_triples_by_confidence {
        let cap = cap.get();
        if rows.len() > cap {
            let mut order: Vec<usize> = (0..rows.len()).collect();
            // stable: equal confidences stay in input order
            order.sort_by(|&a, &b| {
                let ca = rows[a].confidence.unwrap_or(f64::NEG_INFINITY);
                let cb = rows[b].confidence.unwrap_or(f64::NEG_INFINITY);
                cb.total_cmp(&ca)
            });
            let mut keep = vec![false; rows.len()];
            for &i in &order[..cap] {
                keep[i] = true;
            }
            let mut flags = keep.into_iter();
            rows.retain(|_| flags.next().unwrap_or(false));
        }
    }
    Ok(rows)
}

/// Reads a snapshot written by [`super::triples_to_tsv`].
pub fn parse_snapshot_tsv(text: &str, source_id: &str) -> Result<Vec<Triple>, IngestError> {
    let spec = SourceSpec::new(source_id);
    ingest_source(&spec, text.lines())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with(block: &[&str]) -> SourceSpec {
        let mut s = SourceSpec::new("test");
        s.relation_blocklist = block.iter().map(|s| s.to_string()).collect();
        s
    }

    fn heads(ts: &[Triple]) -> Vec<&str> {
        ts.iter().map(|t| t.head.as_str()).collect()
    }

    #[test]
    fn blocklisted_relations_dropped() {
        let spec = spec_with(&["Antonym"]);
        let out = ingest_source(&spec, ["a\tAntonym\tb", "a\trelated_to\tb"]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].relation, "related_to");
        assert_eq!(out[0].source, "test");
    }

    #[test]
    fn empty_input() {
        assert!(ingest_source(&spec_with(&[]), Vec::<&str>::new()).unwrap().is_empty());
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let out = ingest_source(&spec_with(&[]), ["# header", "", "a\tr\tb"]).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn confidence_cap_keeps_most_confident_in_input_order() {
        let mut spec = spec_with(&[]);
        spec.has_confidence = true;
        spec.max_triples_by_confidence = NonZeroUsize::new(2);
        let out = ingest_source(&spec, ["r1\tr\tx\t0.9", "r2\tr\tx\t0.5", "r3\tr\tx\t0.7"]).unwrap();
        assert_eq!(heads(&out), ["r1", "r3"]);
    }

    #[test]
    fn confidence_ties_resolve_by_input_order() {
        let mut spec = spec_with(&[]);
        spec.has_confidence = true;
        spec.max_triples_by_confidence = NonZeroUsize::new(2);
        let out = ingest_source(&spec, ["r1\tr\tx\t0.5", "r2\tr\tx\t0.8", "r3\tr\tx\t0.5"]).unwrap();
        assert_eq!(heads(&out), ["r1", "r2"]);
    }

    #[test]
    fn row_errors_are_collected_with_line_numbers() {
        let mut spec = spec_with(&[]);
        spec.has_confidence = true;
        let err = ingest_source(&spec, ["a\tr\tb\t0.3", "a\tr", "a\tr\tb", "\tr\tb\t0.1", "a\tr\tb\t1.5"])
            .unwrap_err();
        let IngestError::MalformedRows { rows, .. } = err;
        let lines: Vec<usize> = rows.iter().map(|r| r.line).collect();
        assert_eq!(lines, [2, 3, 4, 5]);
        assert!(rows[1].message.contains("missing confidence"));
    }

    #[test]
    fn whitespace_is_normalized() {
        let out = ingest_source(&spec_with(&[]), ["  hot   dog \trelated_to\t bun "]).unwrap();
        assert_eq!(out[0].head, "hot dog");
        assert_eq!(out[0].tail, "bun");
    }
}
