//! `index`, `retrieve` and `contexts`.

use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use kgvqa_core::kg::{parse_snapshot_tsv, KgSnapshot};
use kgvqa_core::query::{assemble_contexts, build_stem_query, StemQuery, DEFAULT_BUDGET};
use kgvqa_core::retrieval::{
    load_index, parse_dump, save_index, Bm25Index, Bm25Params, RetrievalRow, DEFAULT_TOP_K,
};
use kgvqa_core::verbalizer::{
    build_fact_corpus, fact_corpus_to_tsv, Dictionary, FactId, FactSentence, TemplateRegistry, DEFAULT_DICTIONARY,
    DEFAULT_TEMPLATES,
};
use kgvqa_core::Execution;
use log::{info, warn};
use serde::Serialize;

use super::{positive, Internal};
use crate::io::{load_dataset, load_facts, load_policy, read_text, write_text};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Triple file written by `build-kg`
    #[arg(long)]
    pub kg: PathBuf,
    /// Manual templates (`relation<TAB>pattern`); the bundled set when omitted
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Relation-word dictionary for segmentation; the bundled one when omitted
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    /// Output index file
    #[arg(long)]
    pub out: PathBuf,
    /// Fact corpus output; `<out>.facts.tsv` when omitted
    #[arg(long)]
    pub facts: Option<PathBuf>,
}

pub fn index(args: &IndexArgs, exec: Execution) -> Result<()> {
    let policy = load_policy(args.stopwords.as_deref())?;
    let triples = parse_snapshot_tsv(&read_text(&args.kg)?, "kg")
        .map_err(|e| anyhow!("{}: {e}", args.kg.display()))?;
    let snapshot = KgSnapshot::new(triples);

    let dictionary = match &args.dictionary {
        Some(p) => Dictionary::parse(&read_text(p)?),
        None => Dictionary::parse(DEFAULT_DICTIONARY),
    };
    let mut registry = TemplateRegistry::new(dictionary);
    match &args.templates {
        Some(p) => registry
            .load_tsv(&read_text(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => registry.load_tsv(DEFAULT_TEMPLATES).expect("bundled templates are valid"),
    }

    let facts = build_fact_corpus(&snapshot, &registry, &policy, exec);
    let params = Bm25Params { k1: args.k1, b: args.b }.validate()?;
    let index = Bm25Index::build(&facts, params, exec)?;
    save_index(&index, &args.out)?;
    if load_index(&args.out)? != index {
        return Err(Internal("index changed across save and load".into()).into());
    }
    let facts_path = args.facts.clone().unwrap_or_else(|| sidecar(&args.out, "facts.tsv"));
    write_text(&facts_path, &fact_corpus_to_tsv(&facts))?;
    info!(
        "{} facts, {} stems, average length {:.2}",
        index.len(),
        index.vocabulary_len(),
        index.avg_doc_len()
    );

    let mut m = RunManifest::new("index");
    m.input("kg", &args.kg)?;
    for (name, p) in [("templates", &args.templates), ("dictionary", &args.dictionary), ("stopwords", &args.stopwords)] {
        if let Some(p) = p {
            m.input(name, p)?;
        }
    }
    m.param("k1", args.k1).param("b", args.b);
    m.output("index", &args.out)?.output("facts", &facts_path)?;
    m.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Facts kept per query
    #[arg(long, default_value_t = DEFAULT_TOP_K, value_parser = positive)]
    pub k: usize,
    /// Output dump (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn retrieve(args: &RetrieveArgs, exec: Execution) -> Result<()> {
    let policy = load_policy(args.stopwords.as_deref())?;
    let index = load_index(&args.index).map_err(|e| {
        if e.is_version_error() {
            anyhow!("{}: {e}; rebuild it with `kgvqa index`", args.index.display())
        } else {
            anyhow!("{}: {e}", args.index.display())
        }
    })?;
    let data = load_dataset(&args.dataset)?;
    let queries: Vec<StemQuery> = exec.map(&data, |ex| build_stem_query(&ex.question, &ex.image_text(), &policy));
    let empty = queries.iter().filter(|q| q.is_empty()).count();
    if empty > 0 {
        warn!("{empty} queries have no stems and retrieve nothing");
    }
    let results = index.retrieve_batch(&queries, args.k, exec);

    let mut out = String::new();
    for (ex, res) in data.iter().zip(&results) {
        out.push_str(&RetrievalRow::from_results(&ex.example_id, res).to_json_line());
        out.push('\n');
    }
    write_text(&args.out, &out)?;
    info!("{} queries, top {}", data.len(), args.k);

    let mut m = RunManifest::new("retrieve");
    m.input("index", &args.index)?.input("dataset", &args.dataset)?;
    if let Some(p) = &args.stopwords {
        m.input("stopwords", p)?;
    }
    m.param("k", args.k);
    m.output("dump", &args.out)?;
    m.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ContextsArgs {
    /// Retrieval dump written by `retrieve`
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fact corpus written by `index`
    #[arg(long)]
    pub facts: PathBuf,
    /// Knowledge budget in whitespace tokens
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = positive)]
    pub budget: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ContextRow<'a> {
    example_id: &'a str,
    background: &'a str,
    knowledge: &'a str,
    facts_kept: usize,
    facts_dropped: usize,
}

pub fn rows_by_query(dump: &[RetrievalRow]) -> Result<HashMap<&str, &RetrievalRow>> {
    let mut map = HashMap::new();
    for r in dump {
        if map.insert(r.query_id.as_str(), r).is_some() {
            bail!("duplicate query_id `{}` in retrieval dump", r.query_id);
        }
    }
    Ok(map)
}

pub fn contexts(args: &ContextsArgs, _exec: Execution) -> Result<()> {
    let dump = parse_dump(&read_text(&args.dump)?).map_err(|e| anyhow!("{}: {e}", args.dump.display()))?;
    let data = load_dataset(&args.dataset)?;
    let facts = load_facts(&args.facts, &load_policy(None)?)?;
    let by_id: HashMap<FactId, &FactSentence> = facts.iter().map(|f| (f.fact_id, f)).collect();
    let rows = rows_by_query(&dump)?;

    let mut out = String::new();
    let mut starved = 0;
    for ex in &data {
        let row = rows
            .get(ex.example_id.as_str())
            .with_context(|| format!("no retrieval row for example `{}`", ex.example_id))?;
        let ranked: Vec<&FactSentence> = row
            .ranked
            .iter()
            .map(|(f, _)| by_id.get(f).copied().with_context(|| format!("unknown fact id {f}")))
            .collect::<Result<_>>()?;
        let ctx = assemble_contexts(&ex.question, &ex.image_text(), &ranked, args.budget);
        starved += usize::from(ctx.knowledge_starved());
        let line = ContextRow {
            example_id: &ex.example_id,
            background: &ctx.background,
            knowledge: &ctx.knowledge,
            facts_kept: ctx.facts_kept,
            facts_dropped: ctx.facts_dropped,
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    if starved > 0 {
        warn!("{starved} examples have no fact that fits a budget of {} tokens", args.budget);
    }
    write_text(&args.out, &out)?;

    let mut m = RunManifest::new("contexts");
    m.input("dump", &args.dump)?.input("dataset", &args.dataset)?.input("facts", &args.facts)?;
    m.param("budget", args.budget);
    m.output("contexts", &args.out)?;
    m.write_beside(&args.out)?;
    Ok(())
}
