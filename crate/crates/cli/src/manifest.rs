// SPDX-License-Identifier: Apache-2.0

//! Run manifests and atomic output writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::options::RunOptions;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name; `cdcv replay` re-parses these.
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub options: RunOptions,
    pub seeds: Vec<u64>,
    pub fingerprint: Option<String>,
    pub outputs: Vec<FileDigest>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Collects outputs of one run and writes the manifest last.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `rel` under the output directory.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(rel), bytes)?;
        self.written.push(FileDigest {
            path: rel.to_string(),
            sha256: digest(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<()> {
        self.written.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.outputs = std::mem::take(&mut self.written);
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        write_atomic(&self.dir.join(MANIFEST_FILE), s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("x.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
    }
}
