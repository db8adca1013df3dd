//! Where drill sessions live between requests.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use learncorp_core::session::SessionState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("session store is corrupt: {0}")]
    Format(#[from] serde_json::Error),
}

pub trait SessionStore: Send {
    fn get(&self, id: &str) -> Option<SessionState>;
    fn put(&mut self, id: &str, state: SessionState) -> Result<(), StoreError>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    sessions: BTreeMap<String, SessionState>,
}

impl SessionStore for MemoryStore {
    fn get(&self, id: &str) -> Option<SessionState> {
        self.sessions.get(id).cloned()
    }

    fn put(&mut self, id: &str, state: SessionState) -> Result<(), StoreError> {
        self.sessions.insert(id.to_string(), state);
        Ok(())
    }
}

/// All sessions in one JSON file, rewritten atomically on every change so a
/// restart resumes where learners left off.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    sessions: BTreeMap<String, SessionState>,
}

impl FileStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let sessions = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(FileStore { path, sessions })
    }

    fn flush(&self) -> Result<(), StoreError> {
        let dir = self.path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, &self.sessions)?;
        tmp.flush()?;
        tmp.persist(&self.path).map_err(|e| e.error)?;
        Ok(())
    }
}

impl SessionStore for FileStore {
    fn get(&self, id: &str) -> Option<SessionState> {
        self.sessions.get(id).cloned()
    }

    fn put(&mut self, id: &str, state: SessionState) -> Result<(), StoreError> {
        let previous = self.sessions.insert(id.to_string(), state);
        if let Err(e) = self.flush() {
            // Keep memory and disk in step.
            match previous {
                Some(p) => self.sessions.insert(id.to_string(), p),
                None => self.sessions.remove(id),
            };
            return Err(e);
        }
        Ok(())
    }
}
