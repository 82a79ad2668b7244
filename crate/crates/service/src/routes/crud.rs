use std::ops::Range;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use storyexp_core::extract::{extract_entities, keyword_weights, summarize as summarize_text, KnownEntity};
use storyexp_core::model::{FragmentDraft, FragmentEdit, FragmentPatch};
use storyexp_core::render::render_fragment_diagram;
use storyexp_core::{
    CandidateEntity, EntityId, EntityKind, EntitySource, Fragment, FragmentId, GestureKind, SceneConfig, StoryDocument,
    TextSpan,
};

use super::documents::versioned;
use crate::{mutate, ApiError, BaseVersion, Body, SharedState};

pub async fn list_entities(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    Ok(versioned(doc.version, Json(json!({ "version": doc.version, "entities": doc.entities() }))))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NewEntity {
    kind: EntityKind,
    name: String,
    #[serde(default = "one")]
    confidence: f64,
    #[serde(default = "manual")]
    source: EntitySource,
    #[serde(default)]
    aliases: Vec<String>,
}

fn one() -> f64 {
    1.0
}

fn manual() -> EntitySource {
    EntitySource::Manual
}

pub async fn create_entity(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<NewEntity>,
) -> Result<Response, ApiError> {
    let (entity, version) = mutate(&state, &id, base, |doc| {
        let eid = doc.add_entity(req.kind, &req.name, req.source, req.confidence)?;
        for a in &req.aliases {
            doc.add_alias(&eid, a)?;
        }
        Ok(doc.entity(&eid).cloned())
    })
    .await?;
    Ok((StatusCode::CREATED, versioned(version, Json(json!({ "version": version, "entity": entity }))))
        .into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityPatch {
    name: Option<String>,
    kind: Option<EntityKind>,
    #[serde(default)]
    add_aliases: Vec<String>,
}

pub async fn patch_entity(
    State(state): State<SharedState>,
    Path((id, eid)): Path<(String, String)>,
    base: BaseVersion,
    Body(req): Body<EntityPatch>,
) -> Result<Response, ApiError> {
    let eid = EntityId(eid);
    let (body, version) = mutate(&state, &id, base, |doc| {
        if doc.entity(&eid).is_none() {
            return Err(storyexp_core::ModelError::UnknownEntity(eid.clone()).into());
        }
        if let Some(kind) = req.kind {
            doc.set_entity_kind(&eid, kind)?;
        }
        if let Some(name) = &req.name {
            doc.rename_entity(&eid, name)?;
        }
        for a in &req.add_aliases {
            doc.add_alias(&eid, a)?;
        }
        let touched: Vec<_> = doc
            .fragments()
            .iter()
            .filter(|f| f.references(&eid))
            .filter_map(|f| doc.fragment_view(&f.id))
            .collect();
        Ok(json!({ "entity": doc.entity(&eid), "fragments": touched }))
    })
    .await?;
    Ok(with_version(version, body))
}

fn with_version(version: u64, mut body: Value) -> Response {
    body["version"] = json!(version);
    versioned(version, Json(body))
}

pub async fn delete_entity(
    State(state): State<SharedState>,
    Path((id, eid)): Path<(String, String)>,
    base: BaseVersion,
) -> Result<Response, ApiError> {
    let eid = EntityId(eid);
    let (outcome, version) = mutate(&state, &id, base, |doc| Ok(doc.delete_entity(&eid)?)).await?;
    let mut body = serde_json::to_value(&outcome).map_err(|e| ApiError::internal(e.to_string()))?;
    body["hasInvalidFragments"] = json!(!outcome.invalid_fragments.is_empty());
    Ok(with_version(version, body))
}

pub async fn list_fragments(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let views: Vec<_> = doc.fragments().iter().filter_map(|f| doc.fragment_view(&f.id)).collect();
    Ok(versioned(doc.version, Json(json!({ "version": doc.version, "fragments": views }))))
}

fn fragment_body(doc: &StoryDocument, fid: &FragmentId) -> Result<Value, ApiError> {
    let f = doc.fragment(fid).ok_or_else(|| storyexp_core::ModelError::UnknownFragment(fid.clone()))?;
    Ok(json!({
        "fragment": doc.fragment_view(fid),
        "spans": f.spans,
        "pageRange": f.page_range,
        "text": doc.fragment_text(f),
    }))
}

pub async fn get_fragment(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let body = fragment_body(&doc, &FragmentId(fid))?;
    Ok(with_version(doc.version, body))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FragmentRequest<T> {
    #[serde(flatten)]
    inner: T,
    start_step: Option<i64>,
    end_step: Option<i64>,
}

impl<T> FragmentRequest<T> {
    fn interval(&self, current: Option<(usize, usize)>) -> Option<(i64, i64)> {
        match (self.start_step, self.end_step) {
            (None, None) => None,
            (s, e) => {
                let (cs, ce) = current.map_or((0, 0), |(a, b)| (a as i64, b as i64));
                let s = s.unwrap_or(cs);
                Some((s, e.unwrap_or(s.max(ce))))
            }
        }
    }
}

pub async fn create_fragment(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<FragmentRequest<FragmentDraft>>,
) -> Result<Response, ApiError> {
    let (body, version) = mutate(&state, &id, base, |doc| {
        let interval = req.interval(None);
        let fid = doc.create_fragment(req.inner)?;
        if let Some((s, e)) = interval {
            doc.set_fragment_interval(&fid, s, e)?;
        }
        fragment_body(doc, &fid)
    })
    .await?;
    Ok((StatusCode::CREATED, with_version(version, body)).into_response())
}

pub async fn patch_fragment(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
    base: BaseVersion,
    Body(req): Body<FragmentRequest<FragmentPatch>>,
) -> Result<Response, ApiError> {
    let fid = FragmentId(fid);
    let (body, version) = mutate(&state, &id, base, |doc| {
        let current = doc.fragment(&fid).map(|f| (f.interval.start, f.interval.end));
        let interval = req.interval(current);
        doc.update_fragment(&fid, req.inner)?;
        if let Some((s, e)) = interval {
            doc.set_fragment_interval(&fid, s, e)?;
        }
        fragment_body(doc, &fid)
    })
    .await?;
    Ok(with_version(version, body))
}

pub async fn delete_fragment(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
    base: BaseVersion,
) -> Result<Response, ApiError> {
    let fid = FragmentId(fid);
    let (_, version) = mutate(&state, &id, base, |doc| Ok(doc.delete_fragment(&fid)?)).await?;
    Ok(with_version(version, json!({ "deleted": fid })))
}

#[derive(Deserialize)]
pub struct EditBatch {
    pub edits: Vec<FragmentEdit>,
}

/// Applies an edit script straight to the document, all or nothing.
pub async fn apply_edits(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    base: BaseVersion,
    Body(req): Body<EditBatch>,
) -> Result<Response, ApiError> {
    let (report, version) = mutate(&state, &id, base, |doc| Ok(doc.apply_edits(&req.edits)?)).await?;
    Ok(with_version(version, json!({ "report": report })))
}

/// Text of a fragment with its highlighted ranges (in the joined text) and
/// the names of its persons.
fn fragment_context(doc: &StoryDocument, f: &Fragment) -> (String, Vec<Range<usize>>, Vec<String>) {
    let mut highlights = Vec::new();
    let mut offset = 0;
    for (i, s) in f.spans.iter().enumerate() {
        if i > 0 {
            offset += 1;
        }
        for a in doc.annotations().iter().filter(|a| a.gesture == GestureKind::HighlightBox) {
            for h in a.spans.iter().filter(|h| h.page_index == s.page_index) {
                let (lo, hi) = (h.start.max(s.start), h.end.min(s.end));
                if lo < hi {
                    highlights.push(offset + lo - s.start..offset + hi - s.start);
                }
            }
        }
        offset += s.end - s.start;
    }
    let names = f.persons.iter().filter_map(|p| doc.display_name(p)).map(str::to_owned).collect();
    (doc.fragment_text(f), highlights, names)
}

pub async fn keywords(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let fid = FragmentId(fid);
    let f = doc.fragment(&fid).ok_or_else(|| storyexp_core::ModelError::UnknownFragment(fid.clone()))?;
    let (text, highlights, names) = fragment_context(&doc, f);
    let terms = if text.trim().is_empty() { Vec::new() } else { keyword_weights(&text, &highlights, &names, &doc.config)? };
    Ok(with_version(doc.version, json!({ "terms": terms, "selected": f.keywords })))
}

pub async fn summarize(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
    base: BaseVersion,
) -> Result<Response, ApiError> {
    let fid = FragmentId(fid);
    let (text, highlights, names, config) = {
        let slot = state.slot(&id)?;
        let doc = slot.lock().await;
        let f = doc.fragment(&fid).ok_or_else(|| storyexp_core::ModelError::UnknownFragment(fid.clone()))?;
        let (t, h, n) = fragment_context(&doc, f);
        (t, h, n, doc.config.clone())
    };
    let provider = state.provider(&config)?;
    let summary = tokio::task::spawn_blocking(move || summarize_text(&text, &highlights, &names, &config, &*provider))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let (body, version) = mutate(&state, &id, base, |doc| {
        doc.update_fragment(&fid, FragmentPatch { event_summary: Some(summary), ..Default::default() })?;
        fragment_body(doc, &fid)
    })
    .await?;
    Ok(with_version(version, body))
}

#[derive(Deserialize, Default)]
#[serde(default)]
pub struct ExtractRequest {
    /// Page spans to read; every page when empty.
    spans: Vec<TextSpan>,
}

/// Runs the configured provider over the given spans. Nothing is stored;
/// candidate spans are page offsets.
pub async fn extract(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<ExtractRequest>,
) -> Result<Response, ApiError> {
    let (texts, known, config, version) = {
        let slot = state.slot(&id)?;
        let doc = slot.lock().await;
        let spans = if req.spans.is_empty() {
            (0..doc.pages.len()).filter_map(|p| Some(TextSpan::new(p, 0, doc.page_len(p)?))).filter(|s| !s.is_empty()).collect()
        } else {
            req.spans
        };
        let mut texts = Vec::new();
        for s in spans {
            let t = doc.span_text(&s).ok_or(storyexp_core::ModelError::InvalidSpan { span: s })?;
            texts.push((s, t));
        }
        let known: Vec<KnownEntity> = doc.entities().iter().map(KnownEntity::from).collect();
        (texts, known, doc.config.clone(), doc.version)
    };
    let provider = state.provider(&config)?;
    let candidates = tokio::task::spawn_blocking(move || extract_over(&texts, &known, &config, &*provider))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(with_version(version, json!({ "candidates": candidates })))
}

/// Extraction over page spans with candidate spans shifted onto the page.
pub(crate) fn extract_over(
    texts: &[(TextSpan, String)],
    known: &[KnownEntity],
    config: &storyexp_core::ExtractionConfig,
    provider: &dyn storyexp_core::Provider,
) -> Result<Vec<CandidateEntity>, ApiError> {
    let mut out = Vec::new();
    for (span, text) in texts {
        if text.trim().is_empty() {
            continue;
        }
        for mut c in extract_entities(text, known, config, provider)? {
            c.source_span = c.source_span.map(|s| TextSpan::new(span.page_index, span.start + s.start, span.start + s.end));
            out.push(c);
        }
    }
    Ok(out)
}

pub async fn diagram_svg(
    State(state): State<SharedState>,
    Path((id, fid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let doc = slot.lock().await;
    let fid = FragmentId(fid);
    let f = doc.fragment(&fid).ok_or_else(|| storyexp_core::ModelError::UnknownFragment(fid.clone()))?;
    let svg = render_fragment_diagram(f, &doc, &SceneConfig::default());
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}
