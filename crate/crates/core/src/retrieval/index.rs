use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use super::{bm25_term, idf_value};
use crate::exec::Execution;
use crate::query::StemQuery;
use crate::stemming::Stem;
use crate::verbalizer::{FactId, FactSentence};

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("duplicate fact_id {0}")]
    DuplicateFact(FactId),
    #[error("unknown fact_id {0}")]
    UnknownFact(FactId),
    #[error("idf is undefined for an empty index")]
    EmptyIndex,
    #[error("invalid BM25 parameters: k1={k1} (needs finite >= 0), b={b} (needs 0..=1)")]
    InvalidParams { k1: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(self) -> Result<Self, IndexError> {
        let ok = self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b);
        if ok {
            Ok(self)
        } else {
            Err(IndexError::InvalidParams { k1: self.k1, b: self.b })
        }
    }
}

/// One entry of a postings list. `doc` indexes the fact table, which is sorted
/// by fact id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetrievalResult {
    pub fact_id: FactId,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Immutable inverted index. Safe to share across query threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    pub(super) params: Bm25Params,
    pub(super) fact_ids: Vec<FactId>,
    pub(super) doc_lens: Vec<u32>,
    pub(super) postings: BTreeMap<Stem, Vec<Posting>>,
    pub(super) avg_doc_len: f64,
}

pub(super) fn mean_len(doc_lens: &[u32]) -> f64 {
    if doc_lens.is_empty() {
        0.0
    } else {
        doc_lens.iter().map(|&l| u64::from(l)).sum::<u64>() as f64 / doc_lens.len() as f64
    }
}

fn term_counts(stems: &[Stem]) -> BTreeMap<&Stem, u32> {
    let mut tf = BTreeMap::new();
    for s in stems {
        *tf.entry(s).or_insert(0u32) += 1;
    }
    tf
}

fn by_score_then_id(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

impl Bm25Index {
    /// Indexes the stem multiset of every fact.
    pub fn build(corpus: &[FactSentence], params: Bm25Params, exec: Execution) -> Result<Self, IndexError> {
        let docs: Vec<(FactId, &[Stem])> = corpus
            .iter()
            .map(|f| (f.fact_id, f.stem_tokens.as_slice()))
            .collect();
        Self::from_documents(&docs, params, exec)
    }

    /// Builds from raw `(fact_id, stems)` documents.
    pub fn from_documents(
        docs: &[(FactId, &[Stem])],
        params: Bm25Params,
        exec: Execution,
    ) -> Result<Self, IndexError> {
        let params = params.validate()?;
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.sort_by_key(|&i| docs[i].0);
        for w in order.windows(2) {
            if docs[w[0]].0 == docs[w[1]].0 {
                return Err(IndexError::DuplicateFact(docs[w[0]].0));
            }
        }
        let sorted: Vec<(FactId, &[Stem])> = order.iter().map(|&i| docs[i]).collect();

        let counted = exec.map(&sorted, |(_, stems)| term_counts(stems));

        let mut postings: BTreeMap<Stem, Vec<Posting>> = BTreeMap::new();
        for (doc, tf) in counted.into_iter().enumerate() {
            for (stem, tf) in tf {
                postings
                    .entry(stem.clone())
                    .or_default()
                    .push(Posting { doc: doc as u32, tf });
            }
        }
        let doc_lens: Vec<u32> = sorted.iter().map(|(_, s)| s.len() as u32).collect();
        Ok(Self {
            params,
            fact_ids: sorted.iter().map(|(id, _)| *id).collect(),
            avg_doc_len: mean_len(&doc_lens),
            doc_lens,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// N, the number of indexed facts.
    pub fn len(&self) -> usize {
        self.fact_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_ids.is_empty()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn fact_ids(&self) -> &[FactId] {
        &self.fact_ids
    }

    pub fn vocabulary_len(&self) -> usize {
        self.postings.len()
    }

    /// n(s): the number of facts containing `stem`.
    pub fn doc_freq(&self, stem: &Stem) -> usize {
        self.postings.get(stem).map_or(0, Vec::len)
    }

    pub fn postings(&self, stem: &Stem) -> &[Posting] {
        self.postings.get(stem).map_or(&[], Vec::as_slice)
    }

    pub fn doc_len(&self, fact: FactId) -> Result<u32, IndexError> {
        Ok(self.doc_lens[self.doc_index(fact)?])
    }

    fn doc_index(&self, fact: FactId) -> Result<usize, IndexError> {
        self.fact_ids
            .binary_search(&fact)
            .map_err(|_| IndexError::UnknownFact(fact))
    }

    pub fn term_frequency(&self, stem: &Stem, fact: FactId) -> Result<u32, IndexError> {
        let doc = self.doc_index(fact)? as u32;
        let list = self.postings(stem);
        Ok(list
            .binary_search_by_key(&doc, |p| p.doc)
            .map_or(0, |i| list[i].tf))
    }

    pub fn idf(&self, stem: &Stem) -> Result<f64, IndexError> {
        if self.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        Ok(idf_value(self.len(), self.doc_freq(stem)))
    }

    fn term_at(&self, doc: usize, tf: u32) -> f64 {
        bm25_term(tf, self.doc_lens[doc], self.avg_doc_len, self.params.k1, self.params.b)
    }

    /// R(s, f); zero when the fact does not contain the stem.
    pub fn term_score(&self, stem: &Stem, fact: FactId) -> Result<f64, IndexError> {
        let doc = self.doc_index(fact)?;
        let tf = self.term_frequency(stem, fact)?;
        Ok(self.term_at(doc, tf))
    }

    /// Sum over query stem occurrences of idf * R.
    pub fn score(&self, query: &StemQuery, fact: FactId) -> Result<f64, IndexError> {
        let doc = self.doc_index(fact)?;
        let mut total = 0.0;
        for stem in &query.stems {
            let tf = self.term_frequency(stem, fact)?;
            if tf > 0 {
                total += idf_value(self.len(), self.doc_freq(stem)) * self.term_at(doc, tf);
            }
        }
        Ok(total)
    }

    /// The `k` best facts, by descending score then ascending fact id.
    pub fn retrieve_top_k(&self, query: &StemQuery, k: usize) -> Vec<RetrievalResult> {
        self.rank(query, k)
    }

    /// Same ranking with IDF taken in another logarithm base.
    pub fn retrieve_top_k_in_base(&self, query: &StemQuery, k: usize, base: f64) -> Vec<RetrievalResult> {
        assert!(base > 1.0, "log base must exceed 1");
        // Rank on natural-log scores: scaling each idf before summing could
        // round near-ties differently and reorder facts.
        let scale = 1.0 / base.ln();
        let mut ranked = self.rank(query, k);
        for r in &mut ranked {
            r.score *= scale;
        }
        ranked
    }

    pub fn retrieve_batch(
        &self,
        queries: &[StemQuery],
        k: usize,
        exec: Execution,
    ) -> Vec<Vec<RetrievalResult>> {
        exec.map(queries, |q| self.retrieve_top_k(q, k))
    }

    fn rank(&self, query: &StemQuery, k: usize) -> Vec<RetrievalResult> {
        let n = self.len();
        if k == 0 || n == 0 {
            return Vec::new();
        }

        // Term-at-a-time accumulation; per fact, contributions are added in
        // query order so the sum matches scoring the fact directly.
        let mut acc: HashMap<u32, f64> = HashMap::new();
        let mut touched: Vec<u32> = Vec::new();
        for stem in &query.stems {
            let list = self.postings(stem);
            if list.is_empty() {
                continue;
            }
            let w = idf_value(n, list.len());
            for p in list {
                let contribution = w * self.term_at(p.doc as usize, p.tf);
                match acc.get_mut(&p.doc) {
                    Some(v) => *v += contribution,
                    None => {
                        acc.insert(p.doc, 0.0 + contribution);
                        touched.push(p.doc);
                    }
                }
            }
        }

        let mut positive = Vec::new();
        let mut zero_touched = Vec::new();
        let mut negative = Vec::new();
        for &doc in &touched {
            let s = acc[&doc];
            if s > 0.0 {
                positive.push((s, doc));
            } else if s == 0.0 {
                zero_touched.push(doc);
            } else {
                negative.push((s, doc));
            }
        }

        if positive.len() > k {
            positive.select_nth_unstable_by(k - 1, by_score_then_id);
            positive.truncate(k);
        }
        positive.sort_by(by_score_then_id);
        let mut ranked = positive;

        if ranked.len() < k {
            // Zero-score facts (touched with a zero sum, or never touched) in
            // id order, then negative scores.
            zero_touched.sort_unstable();
            let mut zt = zero_touched.iter().peekable();
            for doc in 0..n as u32 {
                if ranked.len() == k {
                    break;
                }
                match acc.get(&doc) {
                    None => ranked.push((0.0, doc)),
                    Some(_) if zt.peek() == Some(&&doc) => {
                        zt.next();
                        ranked.push((0.0, doc));
                    }
                    Some(_) => {}
                }
            }
            if ranked.len() < k {
                negative.sort_by(by_score_then_id);
                ranked.extend(negative.into_iter().take(k - ranked.len()));
            }
        }

        ranked
            .into_iter()
            .enumerate()
            .map(|(i, (score, doc))| RetrievalResult {
                fact_id: self.fact_ids[doc as usize],
                score,
                rank: i + 1,
            })
            .collect()
    }
}
