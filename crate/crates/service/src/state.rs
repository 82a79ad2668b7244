use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as SyncMutex};
use std::time::{Duration, Instant};

use tokio::sync::Mutex;

use storyexp_core::extract::{Gazetteer, RemoteProvider};
use storyexp_core::model::{load_document, save_document, write_atomic, DEFAULT_PAGE_BUDGET};
use storyexp_core::{ExtractionConfig, LayoutSpec, Provider, ProviderKind, RuleProvider, StoryDocument};

use crate::error::ApiError;

pub const DOCUMENT_FILE: &str = "document.json";
pub const SCENE_FILE: &str = "storyline.svg";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_root: PathBuf,
    /// Characters per page for uploaded text.
    pub page_budget: usize,
    /// Upload limit in bytes of text.
    pub max_text_bytes: usize,
    pub preview_ttl: Duration,
    /// Directory served for paths no route claims.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(data_root: impl Into<PathBuf>) -> Self {
        Self {
            data_root: data_root.into(),
            page_budget: DEFAULT_PAGE_BUDGET,
            max_text_bytes: 4 << 20,
            preview_ttl: Duration::from_secs(600),
            static_dir: None,
        }
    }

    /// `STORYEXP_DATA` (default `./data`), `STORYEXP_STATIC` and
    /// `STORYEXP_PREVIEW_TTL_MS`.
    pub fn from_env() -> Self {
        let root = std::env::var_os("STORYEXP_DATA").map_or_else(|| PathBuf::from("data"), PathBuf::from);
        let mut cfg = Self::new(root);
        cfg.static_dir = std::env::var_os("STORYEXP_STATIC").map(PathBuf::from);
        if let Some(ms) = std::env::var("STORYEXP_PREVIEW_TTL_MS").ok().and_then(|v| v.parse().ok()) {
            cfg.preview_ttl = Duration::from_millis(ms);
        }
        cfg
    }
}

/// A proposed layout waiting for confirmation.
pub struct Preview {
    pub doc_id: String,
    pub base_version: u64,
    pub shadow: StoryDocument,
    pub layout: LayoutSpec,
    pub expires: Instant,
}

pub type DocSlot = Arc<Mutex<StoryDocument>>;

pub struct AppState {
    pub config: ServiceConfig,
    docs: SyncMutex<HashMap<String, DocSlot>>,
    pub previews: SyncMutex<HashMap<String, Preview>>,
    gazetteer: Gazetteer,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            docs: SyncMutex::new(HashMap::new()),
            previews: SyncMutex::new(HashMap::new()),
            gazetteer: Gazetteer::builtin(),
        }
    }

    pub fn doc_dir(&self, id: &str) -> PathBuf {
        self.config.data_root.join(id)
    }

    /// Registers a new document and writes it to disk.
    pub fn insert(&self, doc: StoryDocument) -> Result<(), ApiError> {
        save_document(&doc, self.doc_dir(&doc.id).join(DOCUMENT_FILE))?;
        self.docs.lock().unwrap().insert(doc.id.clone(), Arc::new(Mutex::new(doc)));
        Ok(())
    }

    /// The in-memory slot for a document, loading it from disk on first use.
    pub fn slot(&self, id: &str) -> Result<DocSlot, ApiError> {
        if let Some(s) = self.docs.lock().unwrap().get(id) {
            return Ok(s.clone());
        }
        if !valid_id(id) {
            return Err(ApiError::not_found(format!("document {id}")));
        }
        let path = self.doc_dir(id).join(DOCUMENT_FILE);
        if !path.exists() {
            return Err(ApiError::not_found(format!("document {id}")));
        }
        let doc = load_document(&path)?;
        let mut docs = self.docs.lock().unwrap();
        Ok(docs.entry(id.to_owned()).or_insert_with(|| Arc::new(Mutex::new(doc))).clone())
    }

    pub fn persist(&self, doc: &StoryDocument) -> Result<(), ApiError> {
        save_document(doc, self.doc_dir(&doc.id).join(DOCUMENT_FILE))?;
        Ok(())
    }

    pub fn write_scene(&self, id: &str, svg: &str) {
        if let Err(e) = write_atomic(self.doc_dir(id).join(SCENE_FILE), svg.as_bytes()) {
            tracing::warn!("could not cache scene for {id}: {e}");
        }
    }

    pub fn provider(&self, config: &ExtractionConfig) -> Result<Arc<dyn Provider>, ApiError> {
        match config.provider_kind {
            ProviderKind::Rule => Ok(Arc::new(RuleProvider::new(self.gazetteer.clone(), config.rule_confidence))),
            ProviderKind::RemoteLm => Ok(Arc::new(RemoteProvider::from_env()?)),
        }
    }

    pub fn sweep_previews(&self, now: Instant) {
        self.previews.lock().unwrap().retain(|_, p| p.expires > now);
    }
}

/// Document ids are generated by the service; anything else cannot name a
/// directory under the data root.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}
