//! `eval` and `recall`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use kgvqa_core::evaluation::{evaluate_answers, inc_recall_at_k, ExampleScores, Prediction};
use kgvqa_core::retrieval::parse_dump;
use kgvqa_core::Execution;
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{positive, Internal};
use crate::io::{load_dataset, load_facts, load_policy, parse_jsonl, read_text, write_text};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions: JSON lines with `example_id` and `ans`
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// JSON report; the text table goes to `<out>.txt`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct PredictionRow {
    example_id: Value,
    ans: String,
}

fn id_string(v: Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => bail!("example_id must be a string or number, got {other}"),
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Serialize)]
struct EvalReport<'a> {
    n: usize,
    em: f64,
    inc: f64,
    stem: f64,
    per_example: &'a [ExampleScores],
}

pub fn eval(args: &EvalArgs, exec: Execution) -> Result<()> {
    let policy = load_policy(args.stopwords.as_deref())?;
    let data = load_dataset(&args.dataset)?;
    let preds: Vec<Prediction> = parse_jsonl::<PredictionRow>(&args.predictions)?
        .into_iter()
        .map(|r| Ok(Prediction { example_id: id_string(r.example_id)?, ans: r.ans }))
        .collect::<Result<_>>()?;
    let report = evaluate_answers(&preds, &data, &policy, exec)?;
    for m in [report.em, report.inc, report.stem] {
        if !(0.0..=100.0).contains(&m) {
            return Err(Internal(format!("metric {m} outside [0, 100]")).into());
        }
    }
    let json = EvalReport {
        n: report.per_example.len(),
        em: round2(report.em),
        inc: round2(report.inc),
        stem: round2(report.stem),
        per_example: &report.per_example,
    };
    write_text(&args.out, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    let table = sidecar(&args.out, "txt");
    write_text(&table, &report.table())?;
    print!("{}", report.table());
    info!("{} predictions scored against {} examples", preds.len(), data.len());

    let mut m = RunManifest::new("eval");
    m.input("predictions", &args.predictions)?.input("dataset", &args.dataset)?;
    if let Some(p) = &args.stopwords {
        m.input("stopwords", p)?;
    }
    m.output("report", &args.out)?.output("table", &table)?;
    m.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    /// Retrieval dump written by `retrieve`
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fact corpus written by `index`
    #[arg(long)]
    pub facts: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Comma-separated cutoffs
    #[arg(long, value_delimiter = ',', default_value = "1,5,10", value_parser = positive)]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RecallOut<'a> {
    examples: usize,
    recall_at_k: &'a BTreeMap<usize, f64>,
}

pub fn recall(args: &RecallArgs, _exec: Execution) -> Result<()> {
    let policy = load_policy(args.stopwords.as_deref())?;
    let dump = parse_dump(&read_text(&args.dump)?).map_err(|e| anyhow!("{}: {e}", args.dump.display()))?;
    super::retrieval::rows_by_query(&dump)?;
    let data = load_dataset(&args.dataset)?;
    let facts = load_facts(&args.facts, &policy)?;
    let report = inc_recall_at_k(&dump, &data, &facts, &policy, &args.ks)?;

    let values: Vec<f64> = report.recall_at_k.values().copied().collect();
    if values.windows(2).any(|w| w[0] > w[1]) || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Internal(format!("recall not monotone in K: {values:?}")).into());
    }
    for (k, v) in &report.recall_at_k {
        info!("Recall@{k} = {v:.4}");
    }
    let out = RecallOut { examples: report.examples, recall_at_k: &report.recall_at_k };
    write_text(&args.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;

    let mut m = RunManifest::new("recall");
    m.input("dump", &args.dump)?.input("dataset", &args.dataset)?.input("facts", &args.facts)?;
    if let Some(p) = &args.stopwords {
        m.input("stopwords", p)?;
    }
    m.param("ks", &args.ks);
    m.output("recall", &args.out)?;
    m.write_beside(&args.out)?;
    Ok(())
}
