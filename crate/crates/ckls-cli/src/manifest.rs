//! Run manifests: every file-producing command records its full parameter
//! set, seed, and outputs next to the files it writes, and `ckls rerun`
//! replays a manifest to reproduce the outputs byte for byte. Timestamps are
//! informational only and excluded from any identity expectations.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Output files, relative to the manifest's own directory.
    pub output_files: Vec<String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct ManifestRecorder {
    manifest: RunManifest,
    dir: PathBuf,
}

impl ManifestRecorder {
    /// Start recording a command run whose outputs land in `dir`.
    pub fn start<A: Serialize>(command: &str, args: &A, seed: u64, dir: &Path) -> Self {
        ManifestRecorder {
            manifest: RunManifest {
                command: command.to_string(),
                parameters: serde_json::to_value(args).expect("args serialize"),
                seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: now_unix(),
                finished_unix: 0,
                output_files: Vec::new(),
            },
            dir: dir.to_path_buf(),
        }
    }

    pub fn add_output(&mut self, name: &str) {
        self.manifest.output_files.push(name.to_string());
    }

    /// Write `manifest.json` into the output directory.
    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.finished_unix = now_unix();
        let path = self.dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(path, body + "\n")?;
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let body = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&body)?)
}
