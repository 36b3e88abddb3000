//! Layout of the working directory and the files every stage leaves behind.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// A stage input that does not exist yet.
#[derive(Debug)]
pub struct MissingInput {
    pub path: PathBuf,
    pub run: &'static str,
}

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing input {}: run `tenkscan {}` first", self.path.display(), self.run)
    }
}

impl std::error::Error for MissingInput {}

/// Bad or incomplete configuration (contact, rate, flags that conflict).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct WorkDir {
    root: PathBuf,
}

impl WorkDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WorkDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cache(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.jsonl")
    }

    pub fn parsed(&self) -> PathBuf {
        self.root.join("parsed")
    }

    pub fn parsed_index(&self) -> PathBuf {
        self.parsed().join("index.jsonl")
    }

    pub fn store(&self) -> PathBuf {
        self.root.join("store.jsonl")
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("stats")
    }

    pub fn sample(&self) -> PathBuf {
        self.root.join("sample")
    }

    pub fn exports(&self) -> PathBuf {
        self.root.join("exports")
    }

    /// Path shown in provenance records: relative to the root when inside it.
    pub fn display_path(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).display().to_string()
    }
}

/// Fail with [`MissingInput`] unless `path` exists.
pub fn require(path: &Path, run: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingInput { path: path.to_path_buf(), run }.into())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
    }
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    create_parent(path)?;
    fs::write(path, bytes).with_context(|| format!("write {}", path.display()))
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Sidecar describing how an output was made. No timestamps: identical
/// inputs and parameters give an identical sidecar.
#[derive(Debug, Serialize)]
pub struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: String,
    parameters: Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Provenance {
    pub fn new(command: &str, parameters: Value) -> Self {
        Provenance {
            tool: "tenkscan",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, work: &WorkDir, path: &Path) -> Result<Self> {
        self.inputs.push(FileDigest { path: work.display_path(path), sha256: sha256_file(path)? });
        Ok(self)
    }

    pub fn output(mut self, work: &WorkDir, path: &Path) -> Result<Self> {
        self.outputs.push(FileDigest { path: work.display_path(path), sha256: sha256_file(path)? });
        Ok(self)
    }

    /// Write next to `path` as `<path>.provenance.json`.
    pub fn write_beside(&self, path: &Path) -> Result<PathBuf> {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".provenance.json");
        let sidecar = path.with_file_name(name);
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        write_file(&sidecar, &json)?;
        Ok(sidecar)
    }
}
