//! Artifact staging: a command collects its outputs in memory and writes
//! them only once everything has been computed. A failed write removes
//! whatever was already written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Relative path -> contents, written in path order.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<PathBuf, String>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, body: String) {
        self.files.insert(path.into(), body);
    }

    /// Merges `other` under the subdirectory `dir`.
    pub fn nest(&mut self, dir: impl AsRef<Path>, other: Artifacts) {
        for (p, body) in other.files {
            self.files.insert(dir.as_ref().join(p), body);
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        self.files.keys()
    }

    pub fn get(&self, path: impl AsRef<Path>) -> Option<&str> {
        self.files.get(path.as_ref()).map(String::as_str)
    }

    /// Writes every file under `root`. Each file goes to a temporary name
    /// first and is renamed into place; on any error all files written so
    /// far are removed.
    pub fn commit(&self, root: &Path) -> Result<()> {
        let mut written = Vec::new();
        let result = self.write_all(root, &mut written);
        if result.is_err() {
            for p in &written {
                let _ = fs::remove_file(p);
            }
        }
        result
    }

    fn write_all(&self, root: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
        for (rel, body) in &self.files {
            let dest = root.join(rel);
            let dir = dest.parent().unwrap_or(root);
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let tmp = dest.with_extension("partial");
            fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
            fs::rename(&tmp, &dest).map_err(|e| {
                let _ = fs::remove_file(&tmp);
                Error::io(&dest, e)
            })?;
            written.push(dest);
        }
        Ok(())
    }
}

/// Provenance record written next to trained artifacts. Contains no
/// timestamps or absolute paths so reruns reproduce it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// File name -> sha256 for every input file read.
    pub inputs: BTreeMap<String, String>,
    /// Artifact path -> sha256.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
