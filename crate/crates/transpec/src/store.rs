//! Session persistence: `{dir}/{session_id}.json` plus `{dir}/index.json`.
//!
//! Files are replaced atomically. Writes to one session are serialized by a
//! per-session lock; the index has its own lock.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use transpec_core::{Candidate, PromptBundle, PromptStrategy, RankedReport, SourceSegment, TranslationSpec};

use crate::config::Mode;

const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_text: Option<String>,
    pub selected_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderMeta {
    pub chat_model: String,
    pub embed_model: String,
    pub mode: Mode,
}

/// A complete translation run and the translator's choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub spec: TranslationSpec,
    pub segment: SourceSegment,
    pub strategy: PromptStrategy,
    pub prompt: PromptBundle,
    pub raw_response: String,
    pub candidates: Vec<Candidate>,
    pub report: RankedReport,
    #[serde(default)]
    pub selection: Option<Selection>,
    /// Every selection ever recorded, oldest first.
    #[serde(default)]
    pub selection_history: Vec<Selection>,
    pub provider_meta: ProviderMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub source: String,
    pub strategy: transpec_core::StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

impl From<&SessionRecord> for IndexEntry {
    fn from(r: &SessionRecord) -> Self {
        Self {
            session_id: r.session_id.clone(),
            created_at: r.created_at,
            source: r.segment.text.clone(),
            strategy: r.strategy.kind(),
            idempotency_key: r.idempotency_key.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error("session store {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("session file {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    session_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    index_lock: Mutex<()>,
}

/// Ids are generated UUIDs; anything else (path separators, dots) is refused
/// so an id can never address a file outside the store.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id != "index" && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

fn write_atomic(dir: &Path, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io { path: path.to_owned(), source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        Ok(Self { dir, session_locks: Mutex::default(), index_lock: Mutex::default() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.session_locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_owned()).or_default().clone()
    }

    fn write_record(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let path = self.session_path(&record.session_id);
        let mut json = serde_json::to_vec_pretty(record)
            .map_err(|e| StoreError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        json.push(b'\n');
        write_atomic(&self.dir, &path, &json)
    }

    /// Persists a new record and adds it to the index.
    pub fn save(&self, record: &SessionRecord) -> Result<(), StoreError> {
        if !valid_id(&record.session_id) {
            return Err(StoreError::NotFound(record.session_id.clone()));
        }
        {
            let lock = self.lock_for(&record.session_id);
            let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
            self.write_record(record)?;
        }
        let _index = self.index_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut entries = self.read_index()?;
        entries.retain(|e| e.session_id != record.session_id);
        entries.push(IndexEntry::from(record));
        self.write_index(&entries)
    }

    pub fn load(&self, id: &str) -> Result<SessionRecord, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let path = self.session_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_owned())),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { path, reason: e.to_string() })
    }

    /// Read-modify-write under the session's lock. Nothing is written when
    /// `update` fails.
    pub fn update<E>(
        &self,
        id: &str,
        update: impl FnOnce(&mut SessionRecord) -> Result<(), E>,
    ) -> Result<Result<SessionRecord, E>, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut record = self.load(id)?;
        if let Err(e) = update(&mut record) {
            return Ok(Err(e));
        }
        self.write_record(&record)?;
        Ok(Ok(record))
    }

    fn read_index(&self) -> Result<Vec<IndexEntry>, StoreError> {
        let path = self.dir.join(INDEX_FILE);
        match fs::read(&path) {
            Ok(bytes) => {
                serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { path, reason: e.to_string() })
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    fn write_index(&self, entries: &[IndexEntry]) -> Result<(), StoreError> {
        let path = self.dir.join(INDEX_FILE);
        let mut json = serde_json::to_vec_pretty(entries)
            .map_err(|e| StoreError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        json.push(b'\n');
        write_atomic(&self.dir, &path, &json)
    }

    /// Index entries, newest first.
    pub fn list(&self) -> Result<Vec<IndexEntry>, StoreError> {
        let _index = self.index_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut entries = self.read_index()?;
        entries.sort_by(|a, b| b.created_at.cmp(&a.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
        Ok(entries)
    }

    pub fn find_by_idempotency_key(&self, key: &str) -> Result<Option<String>, StoreError> {
        Ok(self.list()?.into_iter().find(|e| e.idempotency_key.as_deref() == Some(key)).map(|e| e.session_id))
    }
}
