//! Structured result documents written by every command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::Result;

use super::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub features: usize,
    pub samples: usize,
    pub classes: usize,
    /// First 64 bits of a SHA-256 over the decimal rendering of features and labels, hex.
    pub content_hash: String,
}

impl DatasetFingerprint {
    pub fn of(dataset: &Dataset) -> Self {
        let mut hasher = Sha256::new();
        for j in 0..dataset.sample_count() {
            for i in 0..dataset.feature_count() {
                hasher.update(format!("{},", dataset.features()[(i, j)]).as_bytes());
            }
            hasher.update(format!("{}\n", dataset.labels()[j]).as_bytes());
        }
        let digest = hasher.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        Self {
            features: dataset.feature_count(),
            samples: dataset.sample_count(),
            classes: dataset.class_count(),
            content_hash: format!("{:016x}", u64::from_be_bytes(word)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub dataset: Option<DatasetFingerprint>,
    pub outputs: serde_json::Value,
    pub timings: BTreeMap<String, f64>,
}

impl ResultRecord {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            dataset: None,
            outputs: serde_json::Value::Object(Default::default()),
            timings: BTreeMap::new(),
        }
    }

    /// Pretty JSON with object keys sorted at every level.
    pub fn to_text(&self) -> Result<String> {
        // serde_json's default map is ordered, so a round trip through Value sorts keys
        let value = serde_json::to_value(self)?;
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
