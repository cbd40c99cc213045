//! Run directories and their manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Incomplete,
    Complete,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub status: Status,
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub artifacts: Vec<Artifact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory whose manifest is rewritten after every artifact, so an
/// interrupted run is left marked incomplete.
pub struct RunDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunDir {
    pub fn create(dir: &Path, config_text: &str, mode: &str, master_seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut run = RunDir {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                status: Status::Incomplete,
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                mode: mode.to_string(),
                master_seed,
                config_sha256: sha256_hex(config_text.as_bytes()),
                artifacts: Vec::new(),
                error: None,
            },
        };
        run.write("config.toml", config_text.as_bytes())?;
        Ok(run)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.artifacts.retain(|a| a.path != name);
        self.manifest.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        self.save()
    }

    /// Renders into memory with `f`, then writes.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.status = Status::Complete;
        self.save()?;
        Ok(self.manifest)
    }

    pub fn fail(mut self, error: &Error) -> Result<()> {
        self.manifest.error = Some(error.to_string());
        self.save()
    }

    fn save(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn incomplete_until_finished() {
        let d = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(d.path(), "mode = \"demo\"\n", "demo", 3).unwrap();
        run.write("a.csv", b"x\n1\n").unwrap();
        let text = fs::read_to_string(d.path().join(MANIFEST)).unwrap();
        assert!(text.contains("\"incomplete\"") && text.contains("a.csv"));
        run.finish().unwrap();
        let text = fs::read_to_string(d.path().join(MANIFEST)).unwrap();
        assert!(text.contains("\"complete\""));
    }
}
