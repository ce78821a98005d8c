use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Bumped whenever an output file schema changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One produced file with its content digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

/// Record of one experiment run, written as `manifest.json` next to the
/// outputs. Re-running `command` (with any `--out-dir`/`--threads`)
/// reproduces every listed file byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub tool_version: String,
    /// Replayable argument vector. The master seed is pinned explicitly;
    /// `--out-dir` and `--threads` are omitted because outputs do not depend
    /// on them.
    pub command: Vec<String>,
    /// SHA-256 of the canonical JSON form of the validated configuration
    /// (or of the SRBM parameter JSON when no network config is involved).
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl ExperimentManifest {
    pub fn new(command: Vec<String>, config_hash: String, seed: u64) -> Self {
        ExperimentManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config_hash,
            seed,
            outputs: Vec::new(),
        }
    }

    /// Writes one output file into the run directory and records its digest.
    pub fn record(&mut self, out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    /// Writes `manifest.json` into the run directory.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        fs::write(&path, body)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
