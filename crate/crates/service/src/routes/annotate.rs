use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::json;

use storyexp_core::extract::KnownEntity;
use storyexp_core::gesture::{bind_to_lines, merge_multiline, recognize, BindingConfig, PendingSpan};
use storyexp_core::model::AnnotationId;
use storyexp_core::{
    CandidateEntity, EntityId, EntityKind, EntitySource, GestureKind, LineBox, Stroke, StoryDocument, TextSpan,
};

use super::crud::extract_over;
use super::documents::versioned;
use crate::{mutate, ApiError, BaseVersion, Body, SharedState};

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InkRequest {
    page_index: usize,
    strokes: Vec<Stroke>,
    /// Line geometry of the page as the client rendered it.
    lines: Vec<LineBox>,
    /// Kind given to an underlined entity.
    #[serde(default = "person")]
    kind: EntityKind,
    /// Keep this ink as a personal template for the recognized class.
    #[serde(default)]
    accept_as_template: bool,
}

fn person() -> EntityKind {
    EntityKind::Person
}

/// Entity answering to `surface`, created with `source` when missing.
fn find_or_add(
    doc: &mut StoryDocument,
    kind: EntityKind,
    surface: &str,
    source: EntitySource,
    confidence: f64,
) -> Result<EntityId, ApiError> {
    if let Some(e) = doc.find_entity(Some(kind), surface) {
        return Ok(e.id.clone());
    }
    Ok(doc.add_entity(kind, surface, source, confidence)?)
}

/// Recognizes the ink, binds it to the text under it and performs the
/// gesture's reading action.
pub async fn create(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<InkRequest>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let mut guard = slot.lock().await;
    base.check(guard.version)?;
    let page_text = guard
        .pages
        .get(req.page_index)
        .cloned()
        .ok_or_else(|| ApiError::bad_request(format!("page {} does not exist", req.page_index)))?;
    let recognition = recognize(&req.strokes, &guard.template_set())?;
    let bound = bind_to_lines(&req.strokes, req.page_index, &req.lines, &page_text, &BindingConfig::default())?;
    let spans: Vec<TextSpan> = bound.iter().map(|b| b.span).collect();
    let gesture = recognition.template_name;

    let mut next = guard.clone();
    let mut candidates: Vec<CandidateEntity> = Vec::new();
    let mut entities: Vec<EntityId> = Vec::new();
    let mut annotations: Vec<AnnotationId> = Vec::new();
    let mut removed: Vec<AnnotationId> = Vec::new();
    let mut modify_target: Option<EntityId> = None;

    match gesture {
        GestureKind::Underline => {
            let created = req.strokes.iter().flat_map(|s| &s.points).map(|p| p.t).fold(f64::INFINITY, f64::min);
            let pending: Vec<PendingSpan> = bound.iter().map(|b| PendingSpan::from_bound(b, created)).collect();
            for group in merge_multiline(&pending, &BindingConfig::default()) {
                let surface =
                    group.iter().filter_map(|s| next.span_text(s)).collect::<Vec<_>>().join(" ");
                let surface = surface.split_whitespace().collect::<Vec<_>>().join(" ");
                let eid = find_or_add(&mut next, req.kind, &surface, EntitySource::StrokeAnnotation, 1.0)?;
                let aid = next.add_annotation(req.page_index, gesture, group.clone(), Some(eid.clone()), req.strokes.clone())?;
                candidates.push(CandidateEntity { surface, kind: req.kind, confidence: 1.0, source_span: group.first().copied() });
                entities.push(eid);
                annotations.push(aid);
            }
        }
        GestureKind::HighlightBox => {
            let aid = next.add_annotation(req.page_index, gesture, spans.clone(), None, req.strokes.clone())?;
            annotations.push(aid);
            let texts: Vec<(TextSpan, String)> =
                spans.iter().filter_map(|s| Some((*s, next.span_text(s)?))).collect();
            let known: Vec<KnownEntity> = next.entities().iter().map(KnownEntity::from).collect();
            let config = next.config.clone();
            let provider = state.provider(&config)?;
            candidates = tokio::task::spawn_blocking(move || extract_over(&texts, &known, &config, &*provider))
                .await
                .map_err(|e| ApiError::internal(e.to_string()))??;
            for c in &candidates {
                let eid = find_or_add(&mut next, c.kind, &c.surface, EntitySource::HighlightAuto, c.confidence)?;
                if !entities.contains(&eid) {
                    entities.push(eid);
                }
            }
        }
        GestureKind::StrikeDelete => {
            let hit: Vec<AnnotationId> = next
                .annotations()
                .iter()
                .filter(|a| a.page_index == req.page_index && a.gesture != GestureKind::StrikeDelete)
                .filter(|a| a.spans.iter().any(|x| spans.iter().any(|s| s.overlaps(x))))
                .map(|a| a.id.clone())
                .collect();
            for aid in hit {
                next.remove_annotation(&aid)?;
                removed.push(aid);
            }
        }
        GestureKind::CircleModify => {
            modify_target = next
                .annotations()
                .iter()
                .filter(|a| a.page_index == req.page_index)
                .filter(|a| a.spans.iter().any(|x| spans.iter().any(|s| s.overlaps(x))))
                .find_map(|a| a.entity.clone())
                .or_else(|| {
                    let surface = spans.iter().filter_map(|s| next.span_text(s)).collect::<Vec<_>>().join(" ");
                    next.find_entity(None, &surface).map(|e| e.id.clone())
                });
        }
    }
    if req.accept_as_template {
        next.add_user_template(gesture, req.strokes.clone());
    }

    let changed = next != *guard;
    if changed {
        next.bump_version();
        state.persist(&next)?;
        *guard = next;
    }
    let version = guard.version;
    let created: Vec<_> = entities.iter().filter_map(|e| guard.entity(e)).collect();
    let body = json!({
        "version": version,
        "recognition": { "gesture": gesture, "score": recognition.score },
        "spans": spans,
        "candidates": candidates,
        "entities": created,
        "annotations": annotations,
        "removedAnnotations": removed,
        "modifyTarget": modify_target,
    });
    let status = if changed { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, versioned(version, Json(body))).into_response())
}

pub async fn remove(
    State(state): State<SharedState>,
    Path((id, aid)): Path<(String, String)>,
    base: BaseVersion,
) -> Result<Response, ApiError> {
    let aid = AnnotationId(aid);
    let (_, version) = mutate(&state, &id, base, |doc| Ok(doc.remove_annotation(&aid)?)).await?;
    Ok(versioned(version, Json(json!({ "version": version, "deleted": aid }))))
}
