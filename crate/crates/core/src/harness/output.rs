//! The on-disk output tree of a run and its manifest.
//!
//! ```text
//! <out>/config.json      resolved config (specs inlined)
//! <out>/images/*.pgm
//! <out>/reports/*.csv, *.json
//! <out>/manifest.json    config hash, tool version, artifact digests
//! <out>/timings.json     wall-clock timings (not digested)
//! ```
//!
//! Every file except `timings.json` is a pure function of the config, so
//! reruns reproduce `manifest.json` byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, HarnessError};
use crate::image::{encode_pgm, BitDepth, TransmissionImage};

pub const TOOL_VERSION: &str = concat!("transid ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the resolved config JSON.
    pub config_hash: String,
    /// Sorted by path.
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("manifest: {e}")))
    }

    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.path == path)
            .map(|a| a.sha256.as_str())
    }
}

/// Writes artifacts under one directory and records their digests.
#[derive(Debug)]
pub struct OutputTree {
    root: PathBuf,
    artifacts: BTreeMap<String, Artifact>,
    timings: BTreeMap<String, f64>,
    started: Instant,
}

impl OutputTree {
    pub fn create(root: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(root.join("images"))?;
        std::fs::create_dir_all(root.join("reports"))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: BTreeMap::new(),
            timings: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf, HarnessError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.artifacts.insert(
            rel.to_string(),
            Artifact {
                path: rel.to_string(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(path)
    }

    pub fn write_image(&mut self, stem: &str, img: &TransmissionImage) -> Result<PathBuf, HarnessError> {
        self.write(&format!("images/{stem}.pgm"), &encode_pgm(img, BitDepth::Sixteen))
    }

    pub fn write_report(&mut self, name: &str, text: &str) -> Result<PathBuf, HarnessError> {
        self.write(&format!("reports/{name}"), text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, HarnessError> {
        let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
        self.write_report(name, &text)
    }

    /// Record the seconds elapsed since the tree was created under `label`.
    pub fn mark(&mut self, label: &str) {
        self.timings
            .insert(label.to_string(), self.started.elapsed().as_secs_f64());
    }

    /// Write the resolved config, `manifest.json` and `timings.json`.
    pub fn finish(mut self, cfg: &ExperimentConfig) -> Result<RunManifest, HarnessError> {
        let config_json = cfg.resolved()?.to_json() + "\n";
        self.write("config.json", config_json.as_bytes())?;
        let manifest = RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: sha256_hex(config_json.as_bytes()),
            artifacts: self.artifacts.values().cloned().collect(),
        };
        std::fs::write(self.root.join("manifest.json"), manifest.to_json())?;
        self.mark("total");
        let timings = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
        std::fs::write(self.root.join("timings.json"), timings + "\n")?;
        Ok(manifest)
    }
}
