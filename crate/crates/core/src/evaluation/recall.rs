use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::EvalError;
use crate::query::VqaExample;
pub use crate::retrieval::RetrievalRow;
use crate::stemming::{stems_of, Stem, StopWordPolicy};
use crate::verbalizer::{FactId, FactSentence};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    /// K -> fraction of examples with an answer stem in the top K facts.
    pub recall_at_k: BTreeMap<usize, f64>,
    pub examples: usize,
}

/// For each K, the fraction of examples whose top-K retrieved facts contain
/// at least one stem of at least one ground-truth answer.
pub fn inc_recall_at_k(
    rows: &[RetrievalRow],
    dataset: &[VqaExample],
    facts: &[FactSentence],
    policy: &StopWordPolicy,
    ks: &[usize],
) -> Result<RecallReport, EvalError> {
    let by_query: HashMap<&str, &RetrievalRow> =
        rows.iter().map(|r| (r.query_id.as_str(), r)).collect();
    let missing: Vec<String> = dataset
        .iter()
        .filter(|e| !by_query.contains_key(e.example_id.as_str()))
        .map(|e| e.example_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingRetrieval(missing));
    }
    let fact_stems: HashMap<FactId, BTreeSet<&Stem>> =
        facts.iter().map(|f| (f.fact_id, f.stem_set())).collect();

    // 1-based depth of the first fact holding an answer stem
    let mut first_hit: Vec<Option<usize>> = Vec::with_capacity(dataset.len());
    let mut unknown = BTreeSet::new();
    for ex in dataset {
        let answer_stems: BTreeSet<Stem> = ex
            .answers
            .iter()
            .flat_map(|(a, _)| stems_of(a, policy))
            .collect();
        let row = by_query[ex.example_id.as_str()];
        let mut hit = None;
        for (depth, (fact, _)) in row.ranked.iter().enumerate() {
            match fact_stems.get(fact) {
                Some(stems) => {
                    if hit.is_none() && stems.iter().any(|s| answer_stems.contains(*s)) {
                        hit = Some(depth + 1);
                    }
                }
                None => {
                    unknown.insert(fact.to_string());
                }
            }
        }
        first_hit.push(hit);
    }
    if !unknown.is_empty() {
        return Err(EvalError::UnknownFacts(unknown.into_iter().collect()));
    }

    let n = dataset.len();
    let recall_at_k = ks
        .iter()
        .map(|&k| {
            let hits = first_hit.iter().filter(|h| h.is_some_and(|d| d <= k)).count();
            let frac = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            (k, frac)
        })
        .collect();
    Ok(RecallReport { recall_at_k, examples: n })
}
