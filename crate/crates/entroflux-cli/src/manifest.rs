use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "entroflux.manifest/1";

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputEntry {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        OutputEntry {
            path: path.display().to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        }
    }
}
