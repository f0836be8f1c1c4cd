//! `signal`: per-fact attention target, retriever distribution and their KL.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use kgvqa_core::signal::{
    aggregate_attention, apply_answer_bias, kl_loss, retriever_distribution, target_distribution, AttentionRecord,
    Distribution, FactSpan, LayerScope, SignalConfig, TokenAgg,
};
use kgvqa_core::verbalizer::FactId;
use kgvqa_core::Execution;
use log::info;
use serde::{Deserialize, Serialize};

use crate::io::{parse_jsonl, read_text, write_text};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Full,
    Half,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agg {
    Max,
    Mean,
    Tophalf,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// JSON with `scores` (layers x tokens), `spans` and optional `contains_answer`
    #[arg(long)]
    pub attention: PathBuf,
    /// JSON lines with `fact_id` and `vector`
    #[arg(long)]
    pub embeddings: PathBuf,
    /// JSON array holding the query vector
    #[arg(long)]
    pub query_embedding: PathBuf,
    #[arg(long, value_enum, default_value_t = Scope::Full)]
    pub layer_scope: Scope,
    #[arg(long, value_enum, default_value_t = Agg::Mean)]
    pub token_agg: Agg,
    /// Added to the raw score of facts listed in `contains_answer`
    #[arg(long)]
    pub answer_bias: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttentionInput {
    scores: Vec<Vec<f64>>,
    spans: Vec<FactSpan>,
    #[serde(default)]
    contains_answer: Vec<FactId>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    fact_id: FactId,
    vector: Vec<f64>,
}

#[derive(Serialize)]
struct SignalOut<'a> {
    kl: f64,
    target: &'a Distribution,
    retriever: &'a Distribution,
}

pub fn signal(args: &SignalArgs, _exec: Execution) -> Result<()> {
    let input: AttentionInput = serde_json::from_str(&read_text(&args.attention)?)
        .with_context(|| format!("parsing {}", args.attention.display()))?;
    let query: Vec<f64> = serde_json::from_str(&read_text(&args.query_embedding)?)
        .with_context(|| format!("parsing {}", args.query_embedding.display()))?;
    let mut embeddings = BTreeMap::new();
    for row in parse_jsonl::<EmbeddingRow>(&args.embeddings)? {
        if embeddings.insert(row.fact_id, row.vector).is_some() {
            bail!("duplicate embedding for fact {}", row.fact_id);
        }
    }

    let cfg = SignalConfig {
        layer_scope: match args.layer_scope {
            Scope::Full => LayerScope::Full,
            Scope::Half => LayerScope::Half,
        },
        token_agg: match args.token_agg {
            Agg::Max => TokenAgg::Max,
            Agg::Mean => TokenAgg::Mean,
            Agg::Tophalf => TokenAgg::TopHalf,
        },
        answer_bias: args.answer_bias,
    };
    let record = AttentionRecord::new(input.scores)?;
    let mut scores = aggregate_attention(&record, &input.spans, &cfg)?;
    if let Some(bias) = cfg.answer_bias {
        let marked: BTreeSet<FactId> = input.contains_answer.iter().copied().collect();
        if let Some(f) = marked.iter().find(|f| !scores.contains_key(f)) {
            bail!("contains_answer lists fact {f}, which has no span");
        }
        scores = apply_answer_bias(&scores, &marked, bias);
    }
    let vectors: BTreeMap<FactId, Vec<f64>> = scores
        .keys()
        .map(|f| {
            embeddings
                .remove(f)
                .map(|v| (*f, v))
                .with_context(|| format!("no embedding for fact {f}"))
        })
        .collect::<Result<_>>()?;

    let target = target_distribution(&scores)?;
    let retriever = retriever_distribution(&query, &vectors)?;
    let kl = kl_loss(&target, &retriever)?;
    info!("{} facts, KL = {kl:.6}", target.len());
    let out = SignalOut { kl, target: &target, retriever: &retriever };
    write_text(&args.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;

    let mut m = RunManifest::new("signal");
    m.input("attention", &args.attention)?
        .input("embeddings", &args.embeddings)?
        .input("query_embedding", &args.query_embedding)?;
    m.param("layer_scope", args.layer_scope)
        .param("token_agg", args.token_agg)
        .param("answer_bias", args.answer_bias);
    m.output("signal", &args.out)?;
    m.write_beside(&args.out)?;
    Ok(())
}
