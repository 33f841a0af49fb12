use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one run: what was asked for and what was written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub instance: String,
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    /// SHA-256 of each output, keyed by path.
    pub checksums: BTreeMap<String, String>,
}

/// Collects output files, writing each one and remembering its checksum.
#[derive(Debug, Default)]
pub struct Outputs {
    paths: Vec<PathBuf>,
    checksums: BTreeMap<String, String>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        log::info!("wrote {}", path.display());
        let key = path.display().to_string();
        self.checksums.insert(key, hex::encode(Sha256::digest(bytes)));
        self.paths.push(path.to_path_buf());
        Ok(())
    }

    pub fn into_manifest(
        self,
        instance: &Path,
        overrides: BTreeMap<String, serde_json::Value>,
        seed: u64,
        wall_clock_seconds: f64,
    ) -> RunManifest {
        RunManifest {
            command: std::env::args().collect(),
            instance: instance.display().to_string(),
            overrides,
            seed,
            outputs: self.paths.iter().map(|p| p.display().to_string()).collect(),
            wall_clock_seconds,
            checksums: self.checksums,
        }
    }
}
