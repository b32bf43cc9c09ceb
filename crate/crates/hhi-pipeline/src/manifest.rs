//! Run manifests: every stage writes `<output>.manifest.json` describing the
//! config, input hashes, and seed that produced its outputs. Re-running with
//! identical inputs is a no-op unless forced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

pub const TOOL: &str = concat!("hhi ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub subcommand: String,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
    /// Output files this manifest vouches for, relative to the manifest.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config_hash: String, seed: u64) -> Self {
        Self {
            tool: TOOL.to_string(),
            subcommand: subcommand.to_string(),
            config_hash,
            input_hashes: BTreeMap::new(),
            seed,
            counts: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_input(mut self, role: &str, path: &Path) -> Result<Self> {
        self.input_hashes.insert(role.to_string(), sha256_file(path)?);
        Ok(self)
    }

    pub fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_string(), value);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// True when an existing manifest matches this run's identity and all of
    /// its outputs still exist.
    pub fn matches_existing(&self, manifest_path: &Path) -> bool {
        let Ok(text) = std::fs::read_to_string(manifest_path) else { return false };
        let Ok(existing) = serde_json::from_str::<Manifest>(&text) else { return false };
        existing.tool == self.tool
            && existing.subcommand == self.subcommand
            && existing.config_hash == self.config_hash
            && existing.input_hashes == self.input_hashes
            && existing.seed == self.seed
            && existing.outputs.iter().all(|o| Path::new(o).exists())
    }

    pub fn write(&self, manifest_path: &Path) -> Result<()> {
        crate::jsonl::write_json(manifest_path, self)
    }
}

/// `<output>.manifest.json` next to the primary output.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hex_digest(&bytes))
}

pub fn sha256_str(text: &str) -> String {
    hex_digest(text.as_bytes())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_noop_detection() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.txt");
        let output = dir.path().join("out.jsonl");
        std::fs::write(&input, "data").unwrap();
        std::fs::write(&output, "row").unwrap();

        let mut manifest = Manifest::new("harvest", sha256_str("cfg"), 42)
            .with_input("input", &input)
            .unwrap();
        manifest.output(&output);
        let mpath = manifest_path(&output);
        assert!(mpath.ends_with("out.jsonl.manifest.json"));
        manifest.write(&mpath).unwrap();

        let candidate = Manifest {
            counts: BTreeMap::new(),
            outputs: vec![output.display().to_string()],
            ..manifest.clone()
        };
        assert!(candidate.matches_existing(&mpath));

        let reseeded = Manifest { seed: 43, ..candidate.clone() };
        assert!(!reseeded.matches_existing(&mpath));

        std::fs::remove_file(&output).unwrap();
        assert!(!candidate.matches_existing(&mpath));
    }
}
