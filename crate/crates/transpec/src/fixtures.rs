//! Content-addressed record/replay store for provider calls.
//!
//! Every entry lives in `{dir}/{key}.json` where `key` is the hex SHA-256 of
//! `kind NUL model_id NUL input`. The full input is hashed, so two prompts
//! that differ in a single byte never share an entry. Entry files are
//!
//! ```json
//! {"kind": "chat", "model_id": "gpt-4", "input_sha256": "…", "input": "…", "output": "…"}
//! ```
//!
//! with `output` a string for chat entries and an array of numbers for
//! embedding entries.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Chat,
    Embed,
}

impl FixtureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Chat => "chat",
            Self::Embed => "embed",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureOutput {
    Text(String),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub kind: FixtureKind,
    pub model_id: String,
    pub input_sha256: String,
    pub input: String,
    pub output: FixtureOutput,
}

impl FixtureEntry {
    pub fn new(kind: FixtureKind, model_id: &str, input: &str, output: FixtureOutput) -> Self {
        Self {
            kind,
            model_id: model_id.to_owned(),
            input_sha256: fixture_key(kind, model_id, input),
            input: input.to_owned(),
            output,
        }
    }
}

pub fn fixture_key(kind: FixtureKind, model_id: &str, input: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(model_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(input.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("fixture store {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("fixture {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Exact-match lookup. An entry whose recorded input differs from
    /// `input` (a hash collision or a hand-edited file) is reported as corrupt.
    pub fn get(&self, kind: FixtureKind, model_id: &str, input: &str) -> Result<Option<FixtureEntry>, FixtureError> {
        let key = fixture_key(kind, model_id, input);
        let path = self.path_for(&key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(FixtureError::Io { path, source }),
        };
        let entry: FixtureEntry = serde_json::from_slice(&bytes)
            .map_err(|e| FixtureError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        if entry.kind != kind || entry.model_id != model_id || entry.input != input || entry.input_sha256 != key {
            return Err(FixtureError::Corrupt { path, reason: "entry does not match its key".into() });
        }
        Ok(Some(entry))
    }

    /// Writes an entry atomically (temp file + rename); concurrent writers of
    /// the same key leave one complete file behind.
    pub fn put(&self, entry: &FixtureEntry) -> Result<PathBuf, FixtureError> {
        let io_err = |source| FixtureError::Io { path: self.dir.clone(), source };
        fs::create_dir_all(&self.dir).map_err(io_err)?;
        let path = self.path_for(&entry.input_sha256);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err)?;
        let json = serde_json::to_vec_pretty(entry)
            .map_err(|e| FixtureError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        tmp.write_all(&json).map_err(io_err)?;
        tmp.write_all(b"\n").map_err(io_err)?;
        tmp.persist(&path).map_err(|e| FixtureError::Io { path: path.clone(), source: e.error })?;
        Ok(path)
    }
}
