//! Run manifest: what was run and which files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub exit_code: u8,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects emitted files while a command runs.
pub struct ManifestBuilder {
    dir: PathBuf,
    command: String,
    config_digest: String,
    started: DateTime<Utc>,
    files: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(dir: &Path, command: &str, config_bytes: &[u8]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_digest: sha256_hex(config_bytes),
            started: Utc::now(),
            files: Vec::new(),
        })
    }

    /// Writes `bytes` to `name` inside the output directory and records it.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.record(name);
        Ok(path)
    }

    /// Records a file already written inside the output directory.
    pub fn record(&mut self, name: &str) {
        let p = PathBuf::from(name);
        if !self.files.contains(&p) {
            self.files.push(p);
        }
    }

    /// Checksums every recorded file and writes the manifest.
    pub fn finish(self, exit_code: u8) -> Result<RunManifest> {
        let files = self
            .files
            .iter()
            .map(|rel| {
                let bytes = fs::read(self.dir.join(rel))
                    .with_context(|| format!("cannot read back {}", rel.display()))?;
                Ok(FileEntry {
                    path: rel.to_string_lossy().into_owned(),
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            command: self.command,
            config_digest: self.config_digest,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: stamp(self.started),
            finished: stamp(Utc::now()),
            exit_code,
            files,
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.dir.join(MANIFEST_NAME), json + "\n")?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::bail;

    /// Checks that every file listed in the manifest in `dir` exists with the
    /// recorded checksum.
    fn verify_manifest(dir: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        for entry in &manifest.files {
            let bytes = fs::read(dir.join(&entry.path))
                .with_context(|| format!("listed file {} missing", entry.path))?;
            if sha256_hex(&bytes) != entry.sha256 {
                bail!("checksum mismatch for {}", entry.path);
            }
        }
        Ok(manifest)
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ManifestBuilder::new(dir.path(), "test", b"cfg").unwrap();
        b.write("a.csv", b"x,y\n1,2\n").unwrap();
        b.write("a.csv", b"x,y\n1,2\n").unwrap();
        let m = b.finish(0).unwrap();
        assert_eq!(m.files.len(), 1);
        assert_eq!(verify_manifest(dir.path()).unwrap(), m);
        fs::write(dir.path().join("a.csv"), b"tampered").unwrap();
        assert!(verify_manifest(dir.path()).is_err());
    }
}
