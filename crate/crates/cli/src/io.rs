//! Dataset directories, annotation files and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eegpipe::events::{duration_hint, read_annotations, EventList};
use eegpipe::manifest::sha256_hex;
use serde::Serialize;

use crate::UsageError;

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `(stem, path)` of every file in `dir` ending in `suffix`, sorted by stem.
pub fn list(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(UsageError(format!("{} is not a directory", dir.display())).into());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let lower = name.to_ascii_lowercase();
        if let Some(stem_len) = lower.strip_suffix(suffix).map(str::len) {
            out.push((name[..stem_len].to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Annotation CSVs (`<stem>.csv`, excluding posterior files).
pub fn annotation_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    Ok(list(dir, ".csv")?
        .into_iter()
        .filter(|(stem, _)| !stem.to_ascii_lowercase().ends_with(".post"))
        .collect())
}

/// Reads annotations; the duration comes from the file's `# duration=` line,
/// else from `fallback`.
pub fn read_events(path: &Path, fallback: Option<f64>, label: &str) -> Result<EventList> {
    let text = read_text(path)?;
    let total = duration_hint(&text)
        .or(fallback)
        .ok_or_else(|| anyhow::anyhow!("{}: no `# duration=` line and no recording to take it from", path.display()))?;
    read_annotations(&text, total, label).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&read(path)?),
    })
}

/// Everything needed to re-run a command: the invocation, resolved
/// configuration, config hashes and input digests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub args: &'a A,
    pub config: serde_json::Value,
    pub hashes: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl<'a, A: Serialize> Manifest<'a, A> {
    pub fn new(command: &'static str, args: &'a A) -> Self {
        Self {
            tool: "eegpipe",
            version: env!("CARGO_PKG_VERSION"),
            command,
            args,
            config: serde_json::Value::Null,
            hashes: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write(path, serde_json::to_string_pretty(self)? + "\n")
    }
}
