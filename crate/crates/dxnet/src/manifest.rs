//! JSON-lines sample manifests. Paths inside a manifest are relative to the
//! manifest file's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DxError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifestEntry {
    pub id: String,
    pub anchor_path: String,
    pub mixture_path: String,
    pub target_path: String,
    pub interferer_paths: Vec<String>,
    pub sir_db: f64,
    pub speaker_id: String,
}

impl SampleManifestEntry {
    fn paths(&self) -> impl Iterator<Item = &str> {
        [&self.anchor_path, &self.mixture_path, &self.target_path]
            .into_iter()
            .chain(&self.interferer_paths)
            .map(String::as_str)
    }
}

/// A parsed manifest together with the directory its paths are relative to.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub entries: Vec<SampleManifestEntry>,
}

impl Manifest {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }
}

pub fn to_jsonl(entries: &[SampleManifestEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[SampleManifestEntry]) -> Result<()> {
    let text = to_jsonl(entries)?;
    let mut f = fs::File::create(path).map_err(|e| DxError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| DxError::io(path, e))
}

/// Parses JSON lines; blank lines are skipped.
pub fn parse_jsonl(path: &Path, text: &str) -> Result<Vec<SampleManifestEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| DxError::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let entry: SampleManifestEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !entry.sir_db.is_finite() {
            return Err(bad("sir_db must be finite".into()));
        }
        if entry.interferer_paths.is_empty() {
            return Err(bad("entry has no interferers".into()));
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Reads a manifest and checks that every referenced file exists.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| DxError::io(path, e))?;
    let entries = parse_jsonl(path, &text)?;
    if entries.is_empty() {
        return Err(DxError::Manifest {
            path: path.to_path_buf(),
            line: 0,
            reason: "manifest is empty".into(),
        });
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for (i, e) in entries.iter().enumerate() {
        for p in e.paths() {
            if !base_dir.join(p).is_file() {
                return Err(DxError::Manifest {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("missing file {p}"),
                });
            }
        }
    }
    Ok(Manifest { base_dir, entries })
}
