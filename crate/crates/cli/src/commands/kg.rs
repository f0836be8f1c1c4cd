//! `corpus` and `build-kg`.

use std::collections::BTreeSet;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use kgvqa_core::kg::{ingest_source, triples_to_tsv, IngestError, KgSnapshot, SourceSpec, DEFAULT_FREQUENT_THRESHOLD};
use kgvqa_core::stemming::{build_vqa_corpus, VqaCorpus};
use kgvqa_core::Execution;
use log::info;
use serde::Deserialize;

use super::Internal;
use crate::io::{load_dataset, load_policy, read_text, write_text};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// VQA dataset (JSON lines)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Stop-word list; the bundled list when omitted
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Output `stem<TAB>frequency` file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn corpus(args: &CorpusArgs, exec: Execution) -> Result<()> {
    let policy = load_policy(args.stopwords.as_deref())?;
    let data = load_dataset(&args.dataset)?;
    let corpus = build_vqa_corpus(&data, &policy, exec);
    write_text(&args.out, &corpus.to_tsv())?;
    info!("{} examples, {} distinct stems", data.len(), corpus.len());

    let mut m = RunManifest::new("corpus");
    m.input("dataset", &args.dataset)?;
    if let Some(p) = &args.stopwords {
        m.input("stopwords", p)?;
    }
    m.output("corpus", &args.out)?;
    m.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct BuildKgArgs {
    /// TOML file listing `[[source]]` entries
    #[arg(long)]
    pub sources: PathBuf,
    /// VQA stem corpus written by `corpus`
    #[arg(long)]
    pub corpus: PathBuf,
    /// Relations seen more often than this are frequent
    #[arg(long, default_value_t = DEFAULT_FREQUENT_THRESHOLD)]
    pub threshold: u64,
    /// Output triple file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourcesFile {
    #[serde(default)]
    source: Vec<SourceEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceEntry {
    id: String,
    /// Relative paths resolve against the TOML file's directory.
    path: PathBuf,
    #[serde(default)]
    has_confidence: bool,
    max_triples: Option<usize>,
    #[serde(default)]
    blocklist: Vec<String>,
}

fn load_sources(path: &Path) -> Result<Vec<SourceSpec>> {
    let file: SourcesFile =
        toml::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut ids = BTreeSet::new();
    let mut specs = Vec::new();
    for e in file.source {
        if !ids.insert(e.id.clone()) {
            bail!("{}: duplicate source id `{}`", path.display(), e.id);
        }
        let cap = match e.max_triples {
            Some(n) => Some(
                NonZeroUsize::new(n).with_context(|| format!("source `{}`: max_triples must be at least 1", e.id))?,
            ),
            None => None,
        };
        if cap.is_some() && !e.has_confidence {
            bail!("source `{}`: max_triples requires has_confidence = true", e.id);
        }
        let mut spec = SourceSpec::new(&e.id);
        spec.path = base.join(&e.path);
        spec.has_confidence = e.has_confidence;
        spec.max_triples_by_confidence = cap;
        spec.relation_blocklist = e.blocklist.into_iter().collect();
        specs.push(spec);
    }
    Ok(specs)
}

fn describe(err: IngestError) -> anyhow::Error {
    let IngestError::MalformedRows { source_id, rows } = err;
    let shown: Vec<String> = rows.iter().take(5).map(ToString::to_string).collect();
    anyhow::anyhow!("source `{source_id}`: {} malformed row(s): {}", rows.len(), shown.join("; "))
}

pub fn build_kg(args: &BuildKgArgs, exec: Execution) -> Result<()> {
    let specs = load_sources(&args.sources)?;
    let corpus = VqaCorpus::parse_tsv(&read_text(&args.corpus)?)
        .with_context(|| format!("parsing {}", args.corpus.display()))?;

    let mut m = RunManifest::new("build-kg");
    m.input("sources", &args.sources)?.input("corpus", &args.corpus)?;
    m.param("threshold", args.threshold);

    let mut ingested = Vec::new();
    for spec in &specs {
        let text = read_text(&spec.path)?;
        let triples = ingest_source(spec, text.lines()).map_err(describe)?;
        info!("source {}: {} triples after blocklist and cap", spec.id, triples.len());
        m.input(&format!("source:{}", spec.id), &spec.path)?;
        ingested.extend(triples);
    }

    let total = ingested.len();
    let snapshot = KgSnapshot::construct(ingested, &corpus, args.threshold, exec);
    if !snapshot.counts_consistent() {
        return Err(Internal("snapshot counts disagree with its triples".into()).into());
    }
    info!("{total} ingested, {}", snapshot.stats_line());

    write_text(&args.out, &triples_to_tsv(&snapshot.triples))?;
    let stats = sidecar(&args.out, "stats");
    write_text(&stats, &format!("{}\n", snapshot.stats_line()))?;
    m.output("kg", &args.out)?.output("stats", &stats)?;
    m.write_beside(&args.out)?;
    Ok(())
}
