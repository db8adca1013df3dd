//! Loaded corpora, keyed by a hash of their content.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use learncorp_core::corpus::{parse_corpus, serialize_corpus, Corpus};
use learncorp_core::error::{CorpusError, SnapshotError};
use learncorp_core::index::{build_index, is_snapshot, CorpusIndex};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Hex digits of the content hash used as a corpus id.
const ID_LEN: usize = 12;

/// Short hash of the canonical XML form, so formatting differences in an
/// upload do not change the id.
pub fn corpus_id(corpus: &Corpus) -> String {
    let digest = Sha256::digest(serialize_corpus(corpus).as_bytes());
    hex::encode(digest)[..ID_LEN].to_string()
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Snapshot(#[from] SnapshotError),
}

/// Reads a corpus from XML or from an index snapshot, told apart by the
/// snapshot magic bytes.
pub fn load_index(path: &Path) -> Result<CorpusIndex, LoadError> {
    let bytes = std::fs::read(path)?;
    if is_snapshot(&bytes) {
        Ok(CorpusIndex::read_snapshot(bytes.as_slice())?)
    } else {
        Ok(build_index(Arc::new(parse_corpus(&bytes)?)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Registered {
    Created,
    Existing,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("a different corpus named {name:?} is already loaded as {existing}")]
pub struct DuplicateName {
    pub name: String,
    pub existing: String,
}

#[derive(Default)]
pub struct Registry {
    corpora: BTreeMap<String, Arc<CorpusIndex>>,
}

impl Registry {
    pub fn get(&self, id: &str) -> Option<Arc<CorpusIndex>> {
        self.corpora.get(id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.corpora.keys().map(String::as_str)
    }

    /// Adds an index under its content id. Identical content is a no-op; a
    /// name already used by other content is refused.
    pub fn insert(&mut self, id: String, index: CorpusIndex) -> Result<(Registered, Arc<CorpusIndex>), DuplicateName> {
        if let Some(existing) = self.corpora.get(&id) {
            return Ok((Registered::Existing, existing.clone()));
        }
        let name = &index.corpus().name;
        if let Some((other, _)) = self.corpora.iter().find(|(_, c)| &c.corpus().name == name) {
            return Err(DuplicateName {
                name: name.clone(),
                existing: other.clone(),
            });
        }
        let index = Arc::new(index);
        self.corpora.insert(id, index.clone());
        Ok((Registered::Created, index))
    }
}
