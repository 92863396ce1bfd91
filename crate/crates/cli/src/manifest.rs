//! Reproducibility manifests written next to every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: BTreeMap<String, String>,
    /// SHA-256 of the input corpus bytes (for `gen`, of the written corpus;
    /// for `compare`, of the report files in argument order).
    pub corpus_digest: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, flags: BTreeMap<String, String>, digest: String) -> Self {
        RunManifest {
            command: command.to_string(),
            flags,
            corpus_digest: digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

pub fn sha256_hex<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut hasher = Sha256::new();
    for chunk in chunks {
        hasher.update(chunk);
    }
    hex::encode(hasher.finalize())
}

/// `report.csv` -> `report.csv.manifest.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
