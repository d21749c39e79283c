//! Output inventory and the JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Experiment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Realization `r` of a group draws from stream `(seed, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub purpose: String,
    pub seed: u64,
    pub streams: Vec<u64>,
}

impl SeedRecord {
    pub fn new(purpose: impl Into<String>, seed: u64, realizations: usize) -> Self {
        Self { purpose: purpose.into(), seed, streams: (0..realizations as u64).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<SeedRecord>,
    pub replay_noise: Option<PathBuf>,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files produced by an experiment, held in memory until the run succeeds.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, data: Vec<u8>) {
        self.files.push((name.into(), data));
    }

    /// Writes every file under `dir` and returns the hash inventory.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<FileRecord>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        self.files
            .iter()
            .map(|(name, data)| {
                let path = dir.join(name);
                fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
                Ok(FileRecord { path: name.clone(), bytes: data.len() as u64, sha256: sha256_hex(data) })
            })
            .collect()
    }
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Files whose current contents no longer match the manifest.
pub fn verify(dir: &Path, manifest: &Manifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let path = dir.join(&f.path);
        let data = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        if sha256_hex(&data) != f.sha256 {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}
