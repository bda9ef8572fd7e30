use std::fs;
use std::path::{Path, PathBuf};

use mallows_dpm::dpm::ChainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ITEMS_FILE: &str = "items.json";

/// Everything needed to rerun a fit bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub data_file: PathBuf,
    pub data_sha256: String,
    /// Item dictionary given with `--items`, if any.
    pub items_file: Option<PathBuf>,
    pub items_sha256: Option<String>,
    pub n: usize,
    pub t_max: usize,
    pub points: usize,
    pub chains: usize,
    pub config: ChainConfig,
    pub traces: Vec<String>,
    pub summaries: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a file and returns its bytes with their digest.
pub fn read_with_digest(path: &Path) -> Result<(Vec<u8>, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = sha256_hex(&bytes);
    Ok((bytes, digest))
}

pub fn chain_trace_name(chain: usize) -> String {
    format!("trace_chain{chain}.jsonl")
}

pub fn chain_summary_name(chain: usize) -> String {
    format!("summary_chain{chain}.csv")
}
