//! Run manifests: enough metadata to regenerate any output file.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub case_path: Option<PathBuf>,
    pub case_sha256: Option<String>,
    pub seed: Option<u64>,
    pub scheme: Option<Vec<usize>>,
    /// Subcommand-specific settings.
    pub config: serde_json::Value,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            case_path: None,
            case_sha256: None,
            seed: None,
            scheme: None,
            config: serde_json::Value::Null,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: now(),
            finished_unix: None,
            outputs: Vec::new(),
        }
    }

    pub fn with_case_file(mut self, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.case_path = Some(path.to_path_buf());
        self.case_sha256 = Some(hex(&Sha256::digest(&bytes)));
        Ok(self)
    }

    /// Mark finished and write next to `primary_output` as
    /// `<output>.manifest.json`.
    pub fn finish(mut self, primary_output: &Path) -> Result<PathBuf> {
        self.finished_unix = Some(now());
        let mut name = primary_output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        std::fs::write(&path, serde_json::to_string_pretty(&self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// SHA-256 of the case's canonical JSON form.
pub fn case_fingerprint(case: &GridCase) -> Result<String> {
    Ok(hex(&Sha256::digest(case.to_json()?.as_bytes())))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
