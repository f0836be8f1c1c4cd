//! File loading shared by the commands. Every failure here is an input error.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use kgvqa_core::query::{parse_dataset, VqaExample};
use kgvqa_core::stemming::StopWordPolicy;
use kgvqa_core::verbalizer::{parse_fact_corpus, FactSentence};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_policy(path: Option<&Path>) -> Result<StopWordPolicy> {
    Ok(match path {
        Some(p) => StopWordPolicy::parse(&read_text(p)?),
        None => StopWordPolicy::default(),
    })
}

pub fn load_dataset(path: &Path) -> Result<Vec<VqaExample>> {
    parse_dataset(&read_text(path)?).map_err(|errs| {
        let shown: Vec<String> = errs.iter().take(5).map(ToString::to_string).collect();
        anyhow!(
            "{}: {} invalid row(s): {}",
            path.display(),
            errs.len(),
            shown.join("; ")
        )
    })
}

pub fn load_facts(path: &Path, policy: &StopWordPolicy) -> Result<Vec<FactSentence>> {
    parse_fact_corpus(&read_text(path)?, policy).with_context(|| format!("parsing {}", path.display()))
}

/// JSON-lines reader that reports the failing line number.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}: invalid JSON row", path.display(), i + 1))
        })
        .collect()
}
