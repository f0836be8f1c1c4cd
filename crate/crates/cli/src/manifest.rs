//! Per-run JSON record: command, parameters, and SHA-256 of every input and
//! output file. No timestamps, so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub params: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.params
            .insert(name.to_owned(), serde_json::to_value(value).expect("param serializes"));
        self
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<&mut Self> {
        self.inputs.insert(name.to_owned(), digest(path)?);
        Ok(self)
    }

    pub fn output(&mut self, name: &str, path: &Path) -> Result<&mut Self> {
        self.outputs.insert(name.to_owned(), digest(path)?);
        Ok(self)
    }

    /// Writes `<primary>.manifest.json` next to the primary output.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let path = sidecar(primary, "manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// `out.tsv` + `stats` -> `out.tsv.stats`
pub fn sidecar(primary: &Path, suffix: &str) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
