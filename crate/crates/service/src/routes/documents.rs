use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use storyexp_core::model::paginate;
use storyexp_core::render::{render_minimap, render_storyline, Window};
use storyexp_core::{ExtractionConfig, LayoutParams, SceneConfig, StoryDocument};

use crate::{mutate, ApiError, BaseVersion, Body, SharedState};

#[derive(Deserialize)]
pub struct NewDocument {
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
}

pub async fn create(State(state): State<SharedState>, Body(req): Body<NewDocument>) -> Result<Response, ApiError> {
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "EmptyText", "text is empty"));
    }
    if req.text.len() > state.config.max_text_bytes {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "TextTooLarge",
            format!("text is {} bytes, the limit is {}", req.text.len(), state.config.max_text_bytes),
        ));
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let title = if req.title.trim().is_empty() { "Untitled".to_owned() } else { req.title.trim().to_owned() };
    let pages = paginate(&req.text, state.config.page_budget);
    let mut start = 0;
    let partition: Vec<Value> = pages
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = p.chars().count();
            start += n;
            json!({ "index": i, "start": start - n, "end": start })
        })
        .collect();
    let doc = StoryDocument::new(id.clone(), title, pages);
    let version = doc.version;
    state.insert(doc)?;
    let body = json!({ "id": id, "version": version, "pages": partition });
    Ok((StatusCode::CREATED, [(header::LOCATION, format!("/documents/{id}"))], Json(body)).into_response())
}

pub async fn fetch(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    Ok(versioned(doc.version, Json(&*doc)))
}

/// Attaches the version as an `ETag` so clients can echo it in `If-Match`.
pub(crate) fn versioned(version: u64, body: impl IntoResponse) -> Response {
    ([(header::ETAG, format!("\"{version}\""))], body).into_response()
}

fn config_body(doc: &StoryDocument) -> Value {
    json!({ "version": doc.version, "extraction": doc.config, "layout": doc.layout_params })
}

pub async fn get_config(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    Ok(versioned(doc.version, Json(config_body(&doc))))
}

#[derive(Deserialize)]
pub struct ConfigPatch {
    extraction: Option<Value>,
    layout: Option<Value>,
}

/// Merges partial objects into the current configuration; unknown keys and
/// invalid values are refused as a whole.
pub async fn patch_config(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<ConfigPatch>,
) -> Result<Response, ApiError> {
    let (mut body, version) = mutate(&state, &id, base, |doc| {
        if let Some(p) = req.extraction {
            let merged: ExtractionConfig = merge(&doc.config, p)?;
            merged.validate()?;
            doc.config = merged;
        }
        if let Some(p) = req.layout {
            let merged: LayoutParams = merge(&doc.layout_params, p)?;
            merged.validate()?;
            doc.layout_params = merged;
        }
        Ok(config_body(doc))
    })
    .await?;
    body["version"] = json!(version);
    Ok(versioned(version, Json(body)))
}

fn merge<T: serde::Serialize + serde::de::DeserializeOwned>(current: &T, patch: Value) -> Result<T, ApiError> {
    let mut v = serde_json::to_value(current).map_err(|e| ApiError::internal(e.to_string()))?;
    let Value::Object(p) = patch else { return Err(ApiError::bad_request("config patch must be an object")) };
    let Value::Object(obj) = &mut v else { unreachable!("configs serialize to objects") };
    for (k, val) in p {
        if !obj.contains_key(&k) {
            return Err(ApiError::bad_request(format!("unknown config key {k:?}")));
        }
        match (obj.get_mut(&k), val) {
            (Some(Value::Object(inner)), Value::Object(vals)) => {
                for (ik, iv) in vals {
                    if !inner.contains_key(&ik) {
                        return Err(ApiError::bad_request(format!("unknown config key {k}.{ik}")));
                    }
                    inner.insert(ik, iv);
                }
            }
            (_, val) => {
                obj.insert(k, val);
            }
        }
    }
    serde_json::from_value(v).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn no_layout(id: &str) -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "NoCommittedLayout",
        format!(
            "document {id} has no committed layout; POST /documents/{id}/layout/preview and then /documents/{id}/layout/commit first"
        ),
    )
}

pub async fn committed_layout(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let layout = doc.committed_layout.as_ref().ok_or_else(|| no_layout(&id))?;
    Ok(versioned(doc.version, Json(json!({ "version": doc.version, "stale": doc.layout_stale, "layout": layout }))))
}

fn svg(version: u64, stale: bool, svg: String) -> Response {
    (
        [
            (header::CONTENT_TYPE, "image/svg+xml".to_owned()),
            (header::ETAG, format!("\"{version}\"")),
            (header::HeaderName::from_static("x-layout-stale"), stale.to_string()),
        ],
        svg,
    )
        .into_response()
}

pub async fn storyline_svg(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let layout = doc.committed_layout.as_ref().ok_or_else(|| no_layout(&id))?;
    let rendered = render_storyline(layout, &doc, &SceneConfig::default());
    Ok(svg(doc.version, doc.layout_stale, rendered.svg))
}

#[derive(Deserialize)]
pub struct WindowQuery {
    x: Option<f64>,
    y: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
}

pub async fn minimap_svg(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Query(q): Query<WindowQuery>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let layout = doc.committed_layout.as_ref().ok_or_else(|| no_layout(&id))?;
    let window = Window {
        x: q.x.unwrap_or(f64::NEG_INFINITY),
        y: q.y.unwrap_or(f64::NEG_INFINITY),
        width: q.width.unwrap_or(f64::INFINITY),
        height: q.height.unwrap_or(f64::INFINITY),
    };
    let m = render_minimap(layout, window, &SceneConfig::default());
    Ok(svg(doc.version, doc.layout_stale, m.svg))
}
