use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::input_error;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file =
        BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digest of one file, recorded under a name relative to its directory so
/// manifests do not depend on where a pipeline was run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_file(path)?,
        })
    }

    pub fn of_relative(base: &Path, relative: &str) -> Result<Self> {
        Ok(FileDigest {
            file: relative.to_string(),
            sha256: sha256_file(&base.join(relative))?,
        })
    }

    /// Fails unless the file at `path` still has the recorded digest.
    pub fn verify(&self, path: &Path) -> Result<()> {
        let actual = sha256_file(path)?;
        if actual != self.sha256 {
            return Err(input_error(format!(
                "digest mismatch for {}: manifest has {}, file has {actual}",
                path.display(),
                self.sha256
            )));
        }
        Ok(())
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub inputs: BTreeMap<String, FileDigest>,
    pub parameters: serde_json::Value,
    pub outputs: BTreeMap<String, FileDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<FileDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Fault,
}

impl Manifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            parameters,
            outputs: BTreeMap::new(),
            runs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.to_string(), FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, dir: &Path, relative: &str) -> Result<()> {
        self.outputs.insert(
            relative.to_string(),
            FileDigest::of_relative(dir, relative)?,
        );
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let file = File::open(&path)
            .map_err(|e| input_error(format!("reading {}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| input_error(format!("parsing {}: {e}", path.display())))
    }

    /// The manifest must come from `command`.
    pub fn expect_command(&self, command: &str, dir: &Path) -> Result<()> {
        if self.command != command {
            return Err(input_error(format!(
                "{} was written by `{}`, expected `{command}`",
                dir.join(MANIFEST).display(),
                self.command
            )));
        }
        Ok(())
    }

    /// Checks that every output listed in the manifest is unchanged on disk.
    pub fn verify_outputs(&self, dir: &Path) -> Result<()> {
        for digest in self.outputs.values() {
            digest.verify(&dir.join(&digest.file))?;
        }
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| input_error(format!("cannot open {}: {e}", path.display())))
}
