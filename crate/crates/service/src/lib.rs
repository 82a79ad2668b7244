//! HTTP API over storyline documents.
//!
//! Every mutation runs against a copy of the document under that document's
//! lock, is written to disk atomically, and only then replaces the live copy
//! with a bumped version. Clients may send `If-Match: <version>` on any
//! mutation; a mismatch is answered with 409.

mod error;
mod routes;
mod state;

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Request};
use axum::http::request::Parts;
use axum::http::header::IF_MATCH;
use axum::routing::{get, patch, post};
use axum::Router;
use serde::de::DeserializeOwned;
use tower_http::services::ServeDir;

use storyexp_core::StoryDocument;

pub use error::ApiError;
pub use state::{AppState, Preview, ServiceConfig, DOCUMENT_FILE, SCENE_FILE};

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    let body_limit = state.config.max_text_bytes * 2 + (64 << 10);
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/documents", post(routes::documents::create))
        .route("/documents/{id}", get(routes::documents::fetch))
        .route("/documents/{id}/config", get(routes::documents::get_config).patch(routes::documents::patch_config))
        .route("/documents/{id}/storyline.svg", get(routes::documents::storyline_svg))
        .route("/documents/{id}/minimap.svg", get(routes::documents::minimap_svg))
        .route("/documents/{id}/layout", get(routes::documents::committed_layout))
        .route("/documents/{id}/annotations", post(routes::annotate::create))
        .route("/documents/{id}/annotations/{aid}", axum::routing::delete(routes::annotate::remove))
        .route("/documents/{id}/entities", get(routes::crud::list_entities).post(routes::crud::create_entity))
        .route(
            "/documents/{id}/entities/{eid}",
            patch(routes::crud::patch_entity).delete(routes::crud::delete_entity),
        )
        .route("/documents/{id}/fragments", get(routes::crud::list_fragments).post(routes::crud::create_fragment))
        .route(
            "/documents/{id}/fragments/{fid}",
            get(routes::crud::get_fragment).patch(routes::crud::patch_fragment).delete(routes::crud::delete_fragment),
        )
        .route("/documents/{id}/fragments/{fid}/diagram.svg", get(routes::crud::diagram_svg))
        .route("/documents/{id}/fragments/{fid}/keywords", get(routes::crud::keywords))
        .route("/documents/{id}/fragments/{fid}/summarize", post(routes::crud::summarize))
        .route("/documents/{id}/edits", post(routes::crud::apply_edits))
        .route("/documents/{id}/extract", post(routes::crud::extract))
        .route("/documents/{id}/layout/preview", post(routes::layout::preview))
        .route("/documents/{id}/layout/commit", post(routes::layout::commit))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `STORYEXP_PORT` (default 8080) and serves until interrupted.
pub async fn serve(config: ServiceConfig, port: u16) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config));
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn port_from_env() -> u16 {
    std::env::var("STORYEXP_PORT").ok().and_then(|p| p.parse().ok()).unwrap_or(8080)
}

/// Applies `f` to a copy of the document, persists the copy with a bumped
/// version and swaps it in. Nothing changes if `f` or the write fails.
pub(crate) async fn mutate<T>(
    state: &AppState,
    id: &str,
    base: BaseVersion,
    f: impl FnOnce(&mut StoryDocument) -> Result<T, ApiError>,
) -> Result<(T, u64), ApiError> {
    let slot = state.slot(id)?;
    let mut doc = slot.lock().await;
    base.check(doc.version)?;
    let mut next = doc.clone();
    let out = f(&mut next)?;
    next.bump_version();
    state.persist(&next)?;
    *doc = next;
    Ok((out, doc.version))
}

/// Optional `If-Match` version a mutation is based on.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct BaseVersion(pub Option<u64>);

impl BaseVersion {
    pub fn check(self, current: u64) -> Result<(), ApiError> {
        match self.0 {
            Some(b) if b != current => Err(ApiError::stale(current, b)),
            _ => Ok(()),
        }
    }
}

impl<S: Send + Sync> FromRequestParts<S> for BaseVersion {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let Some(v) = parts.headers.get(IF_MATCH) else { return Ok(Self(None)) };
        let raw = v.to_str().map_err(|_| ApiError::bad_request("If-Match is not text"))?;
        let raw = raw.trim().trim_start_matches("W/").trim_matches('"');
        raw.parse().map(|n| Self(Some(n))).map_err(|_| ApiError::bad_request(format!("If-Match {raw:?} is not a version")))
    }
}

/// JSON body whose rejections are reported as 400 with the parser message.
pub(crate) struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Self(v)),
            Err(JsonRejection::BytesRejection(e)) => {
                Err(ApiError::new(e.status(), "BodyRejected", e.body_text()))
            }
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}
