//! `manifest.json`: what each command read and wrote, with content digests.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    /// One record per command, in first-run order; a rerun replaces its record.
    pub stages: Vec<StageRecord>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut f = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((format!("{:x}", hasher.finalize()), total))
}

pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let (sha256, bytes) = sha256_file(path)
        .map_err(|e| CliError::compute(format!("cannot hash {}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256,
        bytes,
    })
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            stages: Vec::new(),
        }
    }

    /// Reads the manifest in `dir`, or starts a fresh one. The config
    /// snapshot always reflects the latest command.
    pub fn open(dir: &Path, config: &PipelineConfig) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut m = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| {
                CliError::usage(format!("corrupt manifest {}: {e}", path.display()))
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => RunManifest::new(config),
            Err(e) => {
                return Err(CliError::usage(format!(
                    "cannot read {}: {e}",
                    path.display()
                )))
            }
        };
        m.config = config.clone();
        m.version = env!("CARGO_PKG_VERSION").to_string();
        Ok(m)
    }

    pub fn record(&mut self, stage: StageRecord) {
        match self.stages.iter_mut().find(|s| s.command == stage.command) {
            Some(s) => *s = stage,
            None => self.stages.push(stage),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, "abc").unwrap();
        let d = digest(&p).unwrap();
        assert_eq!(
            d.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(d.bytes, 3);
    }

    #[test]
    fn rerun_replaces_record() {
        let mut m = RunManifest::new(&PipelineConfig::default());
        let rec = |seconds| StageRecord {
            command: "clean".into(),
            seed: 1,
            inputs: vec![],
            outputs: vec![],
            seconds,
        };
        m.record(rec(1.0));
        m.record(rec(2.0));
        assert_eq!(m.stages.len(), 1);
        assert_eq!(m.stages[0].seconds, 2.0);
    }
}
