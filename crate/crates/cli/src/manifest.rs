//! Run manifest: what each stage read and wrote, with content digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub started_at: String,
    pub finished_at: String,
    /// Relative path → sha256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load_or_new(output_dir: &Path, config_hash: &str, seed: u64) -> anyhow::Result<Self> {
        let path = output_dir.join(MANIFEST_FILE);
        let mut m = if path.exists() {
            let text = fs::read_to_string(&path).with_context(|| path.display().to_string())?;
            serde_json::from_str(&text).with_context(|| format!("{}: bad manifest", path.display()))?
        } else {
            RunManifest::default()
        };
        if m.config_hash != config_hash || m.seed != seed {
            // a different configuration invalidates earlier stage records
            m = RunManifest {
                config_hash: config_hash.to_string(),
                seed,
                stages: BTreeMap::new(),
            };
        }
        Ok(m)
    }

    pub fn save(&self, output_dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(output_dir)?;
        let path = output_dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n").with_context(|| path.display().to_string())
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| path.display().to_string())?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Every regular file below `dir`, sorted.
pub fn list_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if dir.is_file() {
        out.push(dir.to_path_buf());
        return Ok(out);
    }
    if !dir.exists() {
        return Ok(out);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).with_context(|| d.display().to_string())? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Digests of every file under each root, keyed by path relative to `base`.
pub fn digest_tree(base: &Path, roots: &[PathBuf]) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for root in roots {
        for f in list_files(root)? {
            let key = f.strip_prefix(base).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            out.insert(key, sha256_file(&f)?);
        }
    }
    Ok(out)
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
