use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, label: String) -> Result<Self> {
        let mut file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        let digest = hasher.finalize();
        Ok(Self {
            path: label,
            bytes,
            sha256: hex::encode(digest.as_slice()),
        })
    }
}

/// Everything needed to rerun a command and check its outputs. Contains no
/// timestamps, so identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    pub config: Option<String>,
    pub seeds: Vec<u64>,
    pub out_dir: String,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to `out_dir`, sorted.
    pub artifacts: Vec<FileDigest>,
}

pub struct ManifestBuilder {
    subcommand: String,
    args: Vec<String>,
    config: Option<PathBuf>,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, args: Vec<String>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            args,
            config: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn config(&mut self, path: &Path) -> &mut Self {
        self.config = Some(path.to_path_buf());
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn seeds(&mut self, seeds: &[u64]) -> &mut Self {
        self.seeds = seeds.to_vec();
        self
    }

    /// Hashes inputs and the named artifacts, then writes `manifest.json`
    /// into `out_dir`.
    pub fn write(&self, out_dir: &Path, artifacts: &[&str]) -> Result<RunManifest> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| FileDigest::of(p, p.display().to_string()))
            .collect::<Result<Vec<_>>>()?;
        let mut names: Vec<&str> = artifacts.to_vec();
        names.sort_unstable();
        names.dedup();
        let artifacts = names
            .iter()
            .map(|n| FileDigest::of(&out_dir.join(n), n.to_string()))
            .collect::<Result<Vec<_>>>()?;
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: self.subcommand.clone(),
            args: self.args.clone(),
            config: self.config.as_ref().map(|p| p.display().to_string()),
            seeds: self.seeds.clone(),
            out_dir: out_dir.display().to_string(),
            inputs,
            artifacts,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(out_dir.join(MANIFEST), text).with_context(|| format!("cannot write {MANIFEST}"))?;
        Ok(m)
    }
}

/// Artifacts whose current checksum differs from the manifest.
pub fn verify(manifest_path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(manifest_path).with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let m: RunManifest = serde_json::from_str(&text).context("malformed manifest")?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for a in &m.artifacts {
        let path = dir.join(&a.path);
        match FileDigest::of(&path, a.path.clone()) {
            Ok(d) if d == *a => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}
