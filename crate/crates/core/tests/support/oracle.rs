//! Brute-force BM25 that shares no code with the index: statistics are
//! recounted from the raw stem lists and every fact is scored and sorted.

#![allow(dead_code)]

use std::cmp::Ordering;

#[derive(Debug, Clone)]
pub struct OracleDoc {
    pub id: u32,
    pub stems: Vec<String>,
}

pub fn idf(n_docs: usize, df: usize) -> f64 {
    let n = n_docs as f64;
    let df = df as f64;
    ((n - df + 0.5) / (df + 0.5)).ln()
}

pub fn score(docs: &[OracleDoc], doc: &OracleDoc, query: &[String], k1: f64, b: f64) -> f64 {
    let n = docs.len();
    let total: u64 = docs.iter().map(|d| d.stems.len() as u64).sum();
    let avg = total as f64 / n as f64;
    let dl = doc.stems.len() as f64;
    let mut sum = 0.0;
    for s in query {
        let tf = doc.stems.iter().filter(|t| *t == s).count();
        if tf == 0 {
            continue;
        }
        let df = docs.iter().filter(|d| d.stems.contains(s)).count();
        let tf = tf as f64;
        let r = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avg));
        sum += idf(n, df) * r;
    }
    sum
}

/// Every fact scored, sorted by score descending then id ascending, truncated.
pub fn top_k(docs: &[OracleDoc], query: &[String], k: usize, k1: f64, b: f64) -> Vec<(u32, f64)> {
    let mut all: Vec<(u32, f64)> = docs
        .iter()
        .map(|d| (d.id, score(docs, d, query, k1, b)))
        .collect();
    all.sort_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .unwrap_or(Ordering::Equal)
            .then(x.0.cmp(&y.0))
    });
    all.truncate(k);
    all
}

/// Statistics recounted once per corpus so large random corpora stay cheap;
/// every fact is still scored and the full list sorted.
pub struct OracleCorpus {
    ids: Vec<u32>,
    lens: Vec<usize>,
    tfs: Vec<std::collections::HashMap<String, usize>>,
    df: std::collections::HashMap<String, usize>,
    avg: f64,
}

impl OracleCorpus {
    pub fn new(docs: &[OracleDoc]) -> Self {
        let mut df = std::collections::HashMap::new();
        let mut tfs = Vec::new();
        for d in docs {
            let mut tf = std::collections::HashMap::new();
            for s in &d.stems {
                *tf.entry(s.clone()).or_insert(0) += 1;
            }
            for s in tf.keys() {
                *df.entry(s.clone()).or_insert(0) += 1;
            }
            tfs.push(tf);
        }
        let total: u64 = docs.iter().map(|d| d.stems.len() as u64).sum();
        Self {
            ids: docs.iter().map(|d| d.id).collect(),
            lens: docs.iter().map(|d| d.stems.len()).collect(),
            tfs,
            df,
            avg: total as f64 / docs.len() as f64,
        }
    }

    pub fn idf(&self, stem: &str) -> f64 {
        idf(self.ids.len(), self.df.get(stem).copied().unwrap_or(0))
    }

    pub fn top_k(&self, query: &[String], k: usize, k1: f64, b: f64) -> Vec<(u32, f64)> {
        let mut all: Vec<(u32, f64)> = (0..self.ids.len())
            .map(|i| {
                let dl = self.lens[i] as f64;
                let mut sum = 0.0;
                for s in query {
                    let Some(&tf) = self.tfs[i].get(s) else { continue };
                    let tf = tf as f64;
                    let r = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avg));
                    sum += self.idf(s) * r;
                }
                (self.ids[i], sum)
            })
            .collect();
        all.sort_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap_or(Ordering::Equal)
                .then(x.0.cmp(&y.0))
        });
        all.truncate(k);
        all
    }
}
