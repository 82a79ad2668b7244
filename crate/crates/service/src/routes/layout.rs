use std::time::Instant;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::Response;
use axum::Json;
use serde::Deserialize;
use serde_json::json;

use storyexp_core::layout::{compute_layout, incremental_update};
use storyexp_core::model::FragmentEdit;
use storyexp_core::render::render_storyline;
use storyexp_core::SceneConfig;

use super::documents::versioned;
use crate::{ApiError, BaseVersion, Body, Preview, SharedState};

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreviewRequest {
    base_version: Option<u64>,
    #[serde(default)]
    edits: Vec<FragmentEdit>,
}

/// Applies the edits to a shadow copy and lays it out. The live document is
/// left untouched; the returned token commits exactly this result.
pub async fn preview(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<PreviewRequest>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let mut shadow = {
        let doc = slot.lock().await;
        base.check(doc.version)?;
        BaseVersion(req.base_version).check(doc.version)?;
        doc.clone()
    };
    let base_version = shadow.version;
    let report = shadow.apply_edits(&req.edits)?;
    let changed = report.changed.clone();
    let (shadow, layout) = tokio::task::spawn_blocking(move || {
        let fragments = shadow.layout_fragments();
        let layout = match &shadow.committed_layout {
            Some(prev) if !shadow.layout_stale => {
                incremental_update(prev, &changed, &fragments, &shadow.layout_params)
            }
            _ => compute_layout(&fragments, &shadow.layout_params),
        };
        layout.map(|l| (shadow, l))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;

    let now = Instant::now();
    let ttl = state.config.preview_ttl;
    let token = uuid::Uuid::new_v4().simple().to_string();
    let body = json!({
        "token": token,
        "baseVersion": base_version,
        "expiresInMs": ttl.as_millis() as u64,
        "layout": layout,
        "metrics": layout.metrics,
        "report": report,
    });
    state.sweep_previews(now);
    state.previews.lock().expect("preview table poisoned").insert(
        token,
        Preview { doc_id: id, base_version, shadow, layout, expires: now + ttl },
    );
    Ok(versioned(base_version, Json(body)))
}

#[derive(Deserialize)]
pub struct CommitRequest {
    token: String,
}

fn gone(token: &str) -> ApiError {
    ApiError::new(StatusCode::GONE, "PreviewExpired", format!("preview {token} is expired, used or unknown"))
}

/// Makes a previewed state live, provided nothing changed since the preview.
pub async fn commit(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<CommitRequest>,
) -> Result<Response, ApiError> {
    let preview = {
        let mut table = state.previews.lock().expect("preview table poisoned");
        match table.get(&req.token) {
            Some(p) if p.doc_id != id => return Err(gone(&req.token)),
            _ => {}
        }
        table.remove(&req.token).ok_or_else(|| gone(&req.token))?
    };
    if preview.expires <= Instant::now() {
        return Err(gone(&req.token));
    }
    let slot = state.slot(&id)?;
    let mut doc = slot.lock().await;
    if doc.version != preview.base_version {
        return Err(ApiError::stale(doc.version, preview.base_version));
    }
    let mut next = preview.shadow;
    next.committed_layout = Some(preview.layout);
    next.layout_stale = false;
    next.bump_version();
    state.persist(&next)?;
    *doc = next;
    let layout = doc.committed_layout.as_ref().expect("just committed");
    state.write_scene(&id, &render_storyline(layout, &doc, &SceneConfig::default()).svg);
    Ok(versioned(doc.version, Json(json!({ "version": doc.version, "layout": layout }))))
}
