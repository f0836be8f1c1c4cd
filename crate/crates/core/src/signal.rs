//! Retriever-training signal: per-fact attention aggregation, the softmax
//! target over facts, the embedding-based retriever distribution and the KL
//! divergence between them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verbalizer::FactId;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("attention record has no layers or rows of unequal length")]
    BadShape,
    #[error("attention scores must be finite")]
    NonFinite,
    #[error("no fact spans given")]
    NoSpans,
    #[error("span for fact {fact} is empty or exceeds {tokens} tokens")]
    SpanOutOfRange { fact: FactId, tokens: usize },
    #[error("spans for facts {0} and {1} overlap")]
    Overlap(FactId, FactId),
    #[error("fact {0} has more than one span")]
    DuplicateSpan(FactId),
    #[error("a distribution needs at least one fact")]
    Empty,
    #[error("vector for fact {fact} has dimension {got}, query has {expected}")]
    DimensionMismatch { fact: FactId, expected: usize, got: usize },
    #[error("distributions cover different facts")]
    KeyMismatch,
    #[error("retriever probability is zero for fact {0} where the target is positive")]
    InfiniteDivergence(FactId),
}

/// Cross-attention of the first decoded token onto the encoder tokens,
/// already averaged over heads: `scores[layer][token]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub scores: Vec<Vec<f64>>,
}

impl AttentionRecord {
    pub fn new(scores: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        let rec = Self { scores };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let tokens = self.scores.first().map(Vec::len).ok_or(SignalError::BadShape)?;
        if self.scores.iter().any(|l| l.len() != tokens) {
            return Err(SignalError::BadShape);
        }
        if self.scores.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite);
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.scores.len()
    }

    pub fn token_count(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }
}

/// Half-open token range of one fact in the knowledge input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactSpan {
    pub fact_id: FactId,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerScope {
    #[default]
    Full,
    /// The upper ceil(L/2) layers.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenAgg {
    Max,
    #[default]
    Mean,
    /// Mean of the largest ceil(m/2) of m values.
    TopHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalConfig {
    pub layer_scope: LayerScope,
    pub token_agg: TokenAgg,
    pub answer_bias: Option<f64>,
}

fn pool(values: &mut [f64], agg: TokenAgg) -> f64 {
    match agg {
        TokenAgg::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        TokenAgg::Mean => values.iter().sum::<f64>() / values.len() as f64,
        TokenAgg::TopHalf => {
            values.sort_by(|a, b| b.total_cmp(a));
            let keep = values.len().div_ceil(2);
            values[..keep].iter().sum::<f64>() / keep as f64
        }
    }
}

pub fn validate_spans(spans: &[FactSpan], tokens: usize) -> Result<(), SignalError> {
    if spans.is_empty() {
        return Err(SignalError::NoSpans);
    }
    let mut ids = BTreeSet::new();
    for s in spans {
        if s.start >= s.end || s.end > tokens {
            return Err(SignalError::SpanOutOfRange { fact: s.fact_id, tokens });
        }
        if !ids.insert(s.fact_id) {
            return Err(SignalError::DuplicateSpan(s.fact_id));
        }
    }
    let mut sorted: Vec<&FactSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.start);
    for w in sorted.windows(2) {
        if w[1].start < w[0].end {
            return Err(SignalError::Overlap(w[0].fact_id, w[1].fact_id));
        }
    }
    Ok(())
}

/// Per-fact attention score. Within each selected layer the span's token
/// scores are pooled with `token_agg`; the pooled values are then averaged
/// across the selected layers.
pub fn aggregate_attention(
    rec: &AttentionRecord,
    spans: &[FactSpan],
    cfg: &SignalConfig,
) -> Result<BTreeMap<FactId, f64>, SignalError> {
    rec.validate()?;
    validate_spans(spans, rec.token_count())?;
    let layers = rec.layer_count();
    let first = match cfg.layer_scope {
        LayerScope::Full => 0,
        LayerScope::Half => layers - layers.div_ceil(2),
    };
    let selected = &rec.scores[first..];
    let mut out = BTreeMap::new();
    for span in spans {
        let mut buf = Vec::with_capacity(span.end - span.start);
        let total: f64 = selected
            .iter()
            .map(|layer| {
                buf.clear();
                buf.extend_from_slice(&layer[span.start..span.end]);
                pool(&mut buf, cfg.token_agg)
            })
            .sum();
        out.insert(span.fact_id, total / selected.len() as f64);
    }
    Ok(out)
}

/// Adds `bias` to the raw score of every flagged fact.
pub fn apply_answer_bias(
    scores: &BTreeMap<FactId, f64>,
    contains_answer: &BTreeSet<FactId>,
    bias: f64,
) -> BTreeMap<FactId, f64> {
    scores
        .iter()
        .map(|(&f, &s)| (f, if contains_answer.contains(&f) { s + bias } else { s }))
        .collect()
}

/// Probabilities over facts; sums to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(BTreeMap<FactId, f64>);

impl Distribution {
    pub fn get(&self, fact: FactId) -> Option<f64> {
        self.0.get(&fact).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, f64)> + '_ {
        self.0.iter().map(|(&f, &p)| (f, p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn as_map(&self) -> &BTreeMap<FactId, f64> {
        &self.0
    }
}

fn softmax(logits: &BTreeMap<FactId, f64>) -> Result<Distribution, SignalError> {
    if logits.is_empty() {
        return Err(SignalError::Empty);
    }
    if logits.values().any(|v| !v.is_finite()) {
        return Err(SignalError::NonFinite);
    }
    let max = logits.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: BTreeMap<FactId, f64> = logits.iter().map(|(&f, &v)| (f, (v - max).exp())).collect();
    let z: f64 = exps.values().sum();
    Ok(Distribution(exps.into_iter().map(|(f, e)| (f, e / z)).collect()))
}

/// Softmax of the aggregated attention scores.
pub fn target_distribution(scores: &BTreeMap<FactId, f64>) -> Result<Distribution, SignalError> {
    softmax(scores)
}

/// Softmax over query/fact embedding dot products.
pub fn retriever_distribution(
    query: &[f64],
    facts: &BTreeMap<FactId, Vec<f64>>,
) -> Result<Distribution, SignalError> {
    let mut dots = BTreeMap::new();
    for (&f, v) in facts {
        if v.len() != query.len() {
            return Err(SignalError::DimensionMismatch {
                fact: f,
                expected: query.len(),
                got: v.len(),
            });
        }
        dots.insert(f, query.iter().zip(v).map(|(a, b)| a * b).sum());
    }
    softmax(&dots)
}

/// `sum_f A_f (ln A_f - ln O_f)`, with zero-probability target terms dropped.
pub fn kl_loss(target: &Distribution, retriever: &Distribution) -> Result<f64, SignalError> {
    if target.0.len() != retriever.0.len() || target.0.keys().ne(retriever.0.keys()) {
        return Err(SignalError::KeyMismatch);
    }
    let mut total = 0.0;
    for (f, a) in target.iter() {
        if a == 0.0 {
            continue;
        }
        let o = retriever.0[&f];
        if o <= 0.0 {
            return Err(SignalError::InfiniteDivergence(f));
        }
        total += a * (a.ln() - o.ln());
    }
    Ok(total)
}

/// Wraps raw probabilities; they must be non-negative and sum to one.
pub fn distribution_from(probs: BTreeMap<FactId, f64>) -> Result<Distribution, SignalError> {
    if probs.is_empty() {
        return Err(SignalError::Empty);
    }
    let sum: f64 = probs.values().sum();
    if probs.values().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(SignalError::NonFinite);
    }
    Ok(Distribution(probs))
}
