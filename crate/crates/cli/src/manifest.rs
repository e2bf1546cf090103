//! Run manifest: configuration echo, input and output digests, stage
//! statuses. Carries no timestamps or absolute output paths so that two
//! identical runs produce identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    /// Completed with row- or cluster-level errors.
    Partial,
    Failed,
    Skipped,
}

impl StageStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StageStatus::Ok => "ok",
            StageStatus::Partial => "partial",
            StageStatus::Failed => "failed",
            StageStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub file: String,
    pub sha256: Option<String>,
    pub bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: Vec<ConfigEntry>,
    pub inputs: Vec<InputRecord>,
    pub stages: Vec<StageRecord>,
    pub stages_ok: usize,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::Core(ineqpanel::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(sha256_hex(&bytes))
}

impl InputRecord {
    /// Digest of an input file; a missing file is recorded without one.
    pub fn describe(role: &str, path: &Path) -> Self {
        let bytes = std::fs::read(path).ok();
        InputRecord {
            role: role.to_string(),
            file: path.display().to_string(),
            sha256: bytes.as_deref().map(sha256_hex),
            bytes: bytes.map(|b| b.len() as u64),
        }
    }
}

impl Manifest {
    pub fn new(config: Vec<(String, String)>) -> Self {
        Manifest {
            schema_version: crate::report::SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.into_iter().map(|(key, value)| ConfigEntry { key, value }).collect(),
            inputs: Vec::new(),
            stages: Vec::new(),
            stages_ok: 0,
            outputs: Vec::new(),
        }
    }

    pub fn stage(&mut self, name: &str, status: StageStatus, message: Option<String>) {
        if status == StageStatus::Ok {
            self.stages_ok += 1;
        }
        self.stages.push(StageRecord {
            name: name.to_string(),
            status,
            message,
        });
    }

    pub fn stage_status(&self, name: &str) -> Option<StageStatus> {
        self.stages.iter().find(|s| s.name == name).map(|s| s.status)
    }
}
