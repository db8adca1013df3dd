//! HTTP API over the learncorp engine: corpus upload, concordance queries,
//! exercise generation, drill sessions and error statistics, all as JSON.

pub mod api;
pub mod error;
pub mod registry;
pub mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use error::ApiError;
pub use registry::{corpus_id, load_index, LoadError, Registry};
pub use routes::{new_state, router, AppState};
pub use store::{FileStore, MemoryStore, SessionStore, StoreError};

pub const DEFAULT_MAX_UPLOAD: usize = 64 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Corpora (XML or index snapshots) loaded at startup.
    pub data_dir: Option<PathBuf>,
    /// Session file; sessions stay in memory when unset.
    pub session_store: Option<PathBuf>,
    pub max_upload_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: None,
            session_store: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD,
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("cannot read data directory {path}: {source}")]
    DataDir { path: PathBuf, source: std::io::Error },
    #[error("cannot load {path}: {source}")]
    Corpus { path: PathBuf, source: LoadError },
    #[error("{path}: {source}")]
    Duplicate {
        path: PathBuf,
        source: registry::DuplicateName,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

fn is_corpus_file(path: &Path) -> bool {
    path.is_file()
        && matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("xml") | Some("lxix")
        )
}

/// Loads every `*.xml` corpus and `*.lxix` snapshot in `dir`, in name order.
pub fn load_data_dir(dir: &Path) -> Result<Registry, StartupError> {
    let read_err = |source| StartupError::DataDir {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(read_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(read_err)?;
    paths.retain(|p| is_corpus_file(p));
    paths.sort();
    let mut registry = Registry::default();
    for path in paths {
        let index = load_index(&path).map_err(|source| StartupError::Corpus {
            path: path.clone(),
            source,
        })?;
        let id = corpus_id(index.corpus());
        registry
            .insert(id.clone(), index)
            .map_err(|source| StartupError::Duplicate {
                path: path.clone(),
                source,
            })?;
        tracing::info!(%id, path = %path.display(), "corpus loaded");
    }
    Ok(registry)
}

pub fn build_state(config: &ServiceConfig) -> Result<AppState, StartupError> {
    let registry = match &config.data_dir {
        Some(dir) => load_data_dir(dir)?,
        None => Registry::default(),
    };
    let sessions: Box<dyn SessionStore> = match &config.session_store {
        Some(path) => Box::new(FileStore::open(path)?),
        None => Box::new(MemoryStore::default()),
    };
    Ok(new_state(registry, sessions))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), StartupError> {
    let state = build_state(&config)?;
    let app = router(state, config.max_upload_bytes);
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.listen,
            source,
        })?;
    tracing::info!(addr = %config.listen, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)
}
