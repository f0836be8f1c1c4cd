use std::fmt::Write as _;

use serde::Deserialize;

use crate::verbalizer::FactId;

use super::RetrievalResult;

/// One query's ranked facts as stored in a retrieval dump.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RetrievalRow {
    pub query_id: String,
    pub ranked: Vec<(FactId, f64)>,
}

impl RetrievalRow {
    pub fn from_results(query_id: &str, results: &[RetrievalResult]) -> Self {
        Self {
            query_id: query_id.to_owned(),
            ranked: results.iter().map(|r| (r.fact_id, r.score)).collect(),
        }
    }

    /// `{"query_id":..,"ranked":[[fact_id,score],..]}` with six-decimal scores.
    pub fn to_json_line(&self) -> String {
        let mut out = String::from("{\"query_id\":");
        out.push_str(&serde_json::to_string(&self.query_id).expect("string serializes"));
        out.push_str(",\"ranked\":[");
        for (i, (fact, score)) in self.ranked.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            // -0.0 and tiny negatives would otherwise print as "-0.000000"
            let mut s = format!("{score:.6}");
            if s == "-0.000000" {
                s = "0.000000".into();
            }
            let _ = write!(out, "[{fact},{s}]");
        }
        out.push_str("]}");
        out
    }
}

/// Parses a JSON-lines retrieval dump.
pub fn parse_dump(text: &str) -> Result<Vec<RetrievalRow>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
