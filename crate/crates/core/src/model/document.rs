use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::oplog::{OpKind, OpPayload, OpTarget, OperationRecord};
use super::{
    Annotation, AnnotationId, Entity, EntityId, EntityKind, EntitySource, Fragment, FragmentId,
    Interval, ModelError, TextSpan, SCHEMA_VERSION,
};
use crate::extract::ExtractionConfig;
use crate::gesture::{GestureKind, Stroke, TemplateSet, UserTemplate};
use crate::layout::{LayoutParams, LayoutSpec};
use crate::text;

type Result<T> = std::result::Result<T, ModelError>;

/// A persistent reading session: source text plus everything the reader built
/// on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryDocument {
    pub schema_version: u32,
    pub id: String,
    pub title: String,
    #[serde(default = "first_version")]
    pub version: u64,
    pub pages: Vec<String>,
    entities: Vec<Entity>,
    annotations: Vec<Annotation>,
    fragments: Vec<Fragment>,
    #[serde(default)]
    pub config: ExtractionConfig,
    #[serde(default)]
    pub layout_params: LayoutParams,
    op_log: Vec<OperationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committed_layout: Option<LayoutSpec>,
    #[serde(default)]
    pub layout_stale: bool,
    #[serde(default)]
    templates: Vec<UserTemplate>,
    #[serde(default)]
    next_seq: u64,
    /// Fields written by newer versions, carried through unchanged.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn first_version() -> u64 {
    1
}

/// Result of deleting an entity.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DeleteOutcome {
    pub modified_fragments: Vec<FragmentId>,
    /// Fragments left without any person; they need the user's attention.
    pub invalid_fragments: Vec<FragmentId>,
    pub cleared_annotations: Vec<AnnotationId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FragmentDraft {
    pub persons: Vec<EntityId>,
    pub time: Option<EntityId>,
    pub place: Option<EntityId>,
    pub event_summary: Option<String>,
    pub spans: Vec<TextSpan>,
    pub keywords: Vec<String>,
}

/// Partial fragment update; `None` leaves a field untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FragmentPatch {
    pub persons: Option<Vec<EntityId>>,
    #[serde(with = "double_option")]
    pub time: Option<Option<EntityId>>,
    #[serde(with = "double_option")]
    pub place: Option<Option<EntityId>>,
    pub event_summary: Option<String>,
    pub keywords: Option<Vec<String>>,
    pub spans: Option<Vec<TextSpan>>,
}

mod double_option {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(v: &Option<Option<T>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(inner) => inner.serialize(s),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<Option<T>>, D::Error> {
        Option::<T>::deserialize(d).map(Some)
    }
}

/// A fragment with entity ids resolved to their current display names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FragmentView {
    pub id: FragmentId,
    pub persons: Vec<String>,
    pub time: Option<String>,
    pub place: Option<String>,
    pub event_summary: String,
    pub keywords: Vec<String>,
    pub interval: Interval,
    pub valid: bool,
}

impl fmt::Display for FragmentView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.id, self.persons.join(", "))?;
        if let Some(t) = &self.time {
            write!(f, " @ {t}")?;
        }
        if let Some(p) = &self.place {
            write!(f, " in {p}")?;
        }
        write!(f, " ({}..{})", self.interval.start, self.interval.end)?;
        if !self.event_summary.is_empty() {
            write!(f, ": {}", self.event_summary)?;
        }
        Ok(())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl StoryDocument {
    pub fn new(id: impl Into<String>, title: impl Into<String>, pages: Vec<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            title: title.into(),
            version: 1,
            pages,
            entities: Vec::new(),
            annotations: Vec::new(),
            fragments: Vec::new(),
            config: ExtractionConfig::default(),
            layout_params: LayoutParams::default(),
            op_log: Vec::new(),
            committed_layout: None,
            layout_stale: false,
            templates: Vec::new(),
            next_seq: 0,
            extra: Map::new(),
        }
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.fragments
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn op_log(&self) -> &[OperationRecord] {
        &self.op_log
    }

    pub fn user_templates(&self) -> &[UserTemplate] {
        &self.templates
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.iter().find(|e| &e.id == id)
    }

    pub fn fragment(&self, id: &FragmentId) -> Option<&Fragment> {
        self.fragments.iter().find(|f| &f.id == id)
    }

    pub fn annotation(&self, id: &AnnotationId) -> Option<&Annotation> {
        self.annotations.iter().find(|a| &a.id == id)
    }

    /// Fragments that can take part in a layout (at least one person).
    pub fn layout_fragments(&self) -> Vec<Fragment> {
        self.fragments.iter().filter(|f| f.is_valid()).cloned().collect()
    }

    /// Looks an entity up by canonical name or alias, case-insensitively.
    pub fn find_entity(&self, kind: Option<EntityKind>, name: &str) -> Option<&Entity> {
        let folded = text::fold(name);
        let matches_kind = |e: &&Entity| kind.is_none_or(|k| e.kind == k);
        self.entities
            .iter()
            .filter(matches_kind)
            .find(|e| text::fold(&e.canonical_name) == folded)
            .or_else(|| self.entities.iter().filter(matches_kind).find(|e| e.answers_to(name)))
    }

    pub fn display_name(&self, id: &EntityId) -> Option<&str> {
        self.entity(id).map(|e| e.canonical_name.as_str())
    }

    pub fn fragment_view(&self, id: &FragmentId) -> Option<FragmentView> {
        let f = self.fragment(id)?;
        let name = |id: &EntityId| self.display_name(id).unwrap_or("?").to_owned();
        Some(FragmentView {
            id: f.id.clone(),
            persons: f.persons.iter().map(name).collect(),
            time: f.time.as_ref().map(name),
            place: f.place.as_ref().map(name),
            event_summary: f.event_summary.clone(),
            keywords: f.keywords.clone(),
            interval: f.interval,
            valid: f.is_valid(),
        })
    }

    /// Source text covered by a fragment's spans, in span order.
    pub fn fragment_text(&self, fragment: &Fragment) -> String {
        fragment
            .spans
            .iter()
            .filter_map(|s| self.pages.get(s.page_index).map(|p| text::slice_chars(p, s.start, s.end)))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn page_len(&self, page: usize) -> Option<usize> {
        self.pages.get(page).map(|p| text::char_len(p))
    }

    pub fn span_text(&self, span: &TextSpan) -> Option<String> {
        self.check_span(span).ok()?;
        Some(text::slice_chars(&self.pages[span.page_index], span.start, span.end))
    }

    pub fn bump_version(&mut self) -> u64 {
        self.version += 1;
        self.version
    }

    /// Gesture templates for recognition: built-ins followed by the reader's
    /// accepted gestures.
    pub fn template_set(&self) -> TemplateSet {
        let mut set = TemplateSet::builtin();
        for t in &self.templates {
            set.push_user(t.clone());
        }
        set
    }

    /// Appends a reader-accepted gesture, evicting the oldest user template of
    /// the same class beyond the per-class cap.
    pub fn add_user_template(&mut self, kind: GestureKind, strokes: Vec<Stroke>) {
        self.templates.push(UserTemplate { kind, strokes });
        let count = self.templates.iter().filter(|t| t.kind == kind).count();
        if count > TemplateSet::USER_CAP_PER_CLASS {
            let oldest = self.templates.iter().position(|t| t.kind == kind).unwrap();
            self.templates.remove(oldest);
        }
    }

    // ---- entities ---------------------------------------------------------

    pub fn add_entity(
        &mut self,
        kind: EntityKind,
        name: &str,
        source: EntitySource,
        confidence: f64,
    ) -> Result<EntityId> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::InvalidConfidence(confidence));
        }
        self.ensure_name_free(kind, name, None)?;
        let id = EntityId(self.alloc_id('e'));
        let entity = Entity {
            id: id.clone(),
            kind,
            canonical_name: name.to_owned(),
            aliases: BTreeSet::new(),
            source,
            confidence,
            color_key: self.next_color_key(kind),
        };
        self.entities.push(entity.clone());
        self.log(OpKind::Create, OpTarget::Entity, &id.0, OpPayload::Entity { entity }, vec![id.clone()]);
        Ok(id)
    }

    /// Persons take distinct palette slots starting at 0 and skipping slot 1,
    /// which is reserved for places.
    fn next_color_key(&self, kind: EntityKind) -> u32 {
        match kind {
            EntityKind::Person => match self
                .entities
                .iter()
                .filter(|e| e.kind == EntityKind::Person)
                .map(|e| e.color_key)
                .max()
            {
                None => 0,
                Some(0) => 2,
                Some(k) => k + 1,
            },
            EntityKind::Place => 1,
            EntityKind::Time => 2,
            EntityKind::Event => 3,
        }
    }

    fn ensure_name_free(&self, kind: EntityKind, name: &str, except: Option<&EntityId>) -> Result<()> {
        let folded = text::fold(name);
        let taken = self
            .entities
            .iter()
            .any(|e| e.kind == kind && Some(&e.id) != except && text::fold(&e.canonical_name) == folded);
        if taken {
            Err(ModelError::DuplicateName { kind, name: name.to_owned() })
        } else {
            Ok(())
        }
    }

    fn entity_index(&self, id: &EntityId) -> Result<usize> {
        self.entities
            .iter()
            .position(|e| &e.id == id)
            .ok_or_else(|| ModelError::UnknownEntity(id.clone()))
    }

    /// Renames an entity. The old name becomes an alias; every fragment and
    /// annotation sees the new name because they hold the id.
    pub fn rename_entity(&mut self, id: &EntityId, new_name: &str) -> Result<&Entity> {
        let idx = self.entity_index(id)?;
        let new_name = new_name.trim();
        if new_name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if self.entities[idx].canonical_name == new_name {
            return Ok(&self.entities[idx]);
        }
        let kind = self.entities[idx].kind;
        self.ensure_name_free(kind, new_name, Some(id))?;
        let entity = &mut self.entities[idx];
        let old = std::mem::replace(&mut entity.canonical_name, new_name.to_owned());
        let folded_new = text::fold(new_name);
        entity.aliases.retain(|a| text::fold(a) != folded_new);
        if text::fold(&old) != folded_new {
            entity.aliases.insert(old);
        }
        let snapshot = entity.clone();
        self.log(OpKind::Rename, OpTarget::Entity, &id.0, OpPayload::Entity { entity: snapshot }, vec![id.clone()]);
        Ok(&self.entities[idx])
    }

    pub fn add_alias(&mut self, id: &EntityId, alias: &str) -> Result<()> {
        let idx = self.entity_index(id)?;
        let alias = alias.trim();
        let entity = &mut self.entities[idx];
        if alias.is_empty() || entity.answers_to(alias) {
            return Ok(());
        }
        entity.aliases.insert(alias.to_owned());
        let snapshot = entity.clone();
        self.log(OpKind::Modify, OpTarget::Entity, &id.0, OpPayload::Entity { entity: snapshot }, vec![id.clone()]);
        Ok(())
    }

    /// Changes an entity's kind. Refused while a fragment uses it in a
    /// kind-specific role.
    pub fn set_entity_kind(&mut self, id: &EntityId, kind: EntityKind) -> Result<()> {
        let idx = self.entity_index(id)?;
        if self.entities[idx].kind == kind {
            return Ok(());
        }
        if self.fragments.iter().any(|f| f.references(id)) {
            return Err(ModelError::EntityInUse(id.clone()));
        }
        let name = self.entities[idx].canonical_name.clone();
        self.ensure_name_free(kind, &name, Some(id))?;
        let color_key = self.next_color_key(kind);
        let entity = &mut self.entities[idx];
        entity.kind = kind;
        entity.color_key = color_key;
        let snapshot = entity.clone();
        self.log(OpKind::Modify, OpTarget::Entity, &id.0, OpPayload::Entity { entity: snapshot }, vec![id.clone()]);
        Ok(())
    }

    /// Removes an entity and every reference to it. Fragments left without a
    /// person are kept and reported, never deleted.
    pub fn delete_entity(&mut self, id: &EntityId) -> Result<DeleteOutcome> {
        let idx = self.entity_index(id)?;
        let mut outcome = DeleteOutcome::default();
        for fi in 0..self.fragments.len() {
            let f = &mut self.fragments[fi];
            if !f.references(id) {
                continue;
            }
            f.persons.retain(|p| p != id);
            if f.time.as_ref() == Some(id) {
                f.time = None;
            }
            if f.place.as_ref() == Some(id) {
                f.place = None;
            }
            outcome.modified_fragments.push(f.id.clone());
            if !f.is_valid() {
                outcome.invalid_fragments.push(f.id.clone());
            }
            let snapshot = f.clone();
            let fid = snapshot.id.0.clone();
            self.log(OpKind::Modify, OpTarget::Fragment, &fid, OpPayload::Fragment { fragment: snapshot }, Vec::new());
        }
        for ai in 0..self.annotations.len() {
            if self.annotations[ai].entity.as_ref() == Some(id) {
                self.annotations[ai].entity = None;
                let snapshot = self.annotations[ai].clone();
                outcome.cleared_annotations.push(snapshot.id.clone());
                let aid = snapshot.id.0.clone();
                self.log(OpKind::Modify, OpTarget::Annotation, &aid, OpPayload::Annotation { annotation: snapshot }, Vec::new());
            }
        }
        self.entities.remove(idx);
        self.log(OpKind::Delete, OpTarget::Entity, &id.0, OpPayload::Removed, vec![id.clone()]);
        if !outcome.modified_fragments.is_empty() {
            self.layout_stale = true;
        }
        Ok(outcome)
    }

    // ---- fragments --------------------------------------------------------

    fn check_kind(&self, id: &EntityId, expected: EntityKind) -> Result<()> {
        let e = self.entity(id).ok_or_else(|| ModelError::UnknownEntity(id.clone()))?;
        if e.kind != expected {
            return Err(ModelError::WrongEntityKind { id: id.clone(), expected, found: e.kind });
        }
        Ok(())
    }

    fn check_span(&self, span: &TextSpan) -> Result<()> {
        let len = self.page_len(span.page_index).ok_or(ModelError::InvalidSpan { span: *span })?;
        if span.start < span.end && span.end <= len {
            Ok(())
        } else {
            Err(ModelError::InvalidSpan { span: *span })
        }
    }

    fn check_persons(&self, persons: &[EntityId]) -> Result<Vec<EntityId>> {
        if persons.is_empty() {
            return Err(ModelError::EmptyPersons);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(persons.len());
        for p in persons {
            self.check_kind(p, EntityKind::Person)?;
            if seen.insert(p.clone()) {
                out.push(p.clone());
            }
        }
        Ok(out)
    }

    fn fragment_index(&self, id: &FragmentId) -> Result<usize> {
        self.fragments
            .iter()
            .position(|f| &f.id == id)
            .ok_or_else(|| ModelError::UnknownFragment(id.clone()))
    }

    /// Next free timeline step: one past the latest fragment end.
    fn next_step(&self) -> usize {
        self.fragments.iter().map(|f| f.interval.end + 1).max().unwrap_or(0)
    }

    pub fn create_fragment(&mut self, draft: FragmentDraft) -> Result<FragmentId> {
        let persons = self.check_persons(&draft.persons)?;
        if let Some(t) = &draft.time {
            self.check_kind(t, EntityKind::Time)?;
        }
        if let Some(p) = &draft.place {
            self.check_kind(p, EntityKind::Place)?;
        }
        for s in &draft.spans {
            self.check_span(s)?;
        }
        let step = self.next_step();
        let id = FragmentId(self.alloc_id('f'));
        let fragment = Fragment {
            id: id.clone(),
            persons,
            time: draft.time,
            place: draft.place,
            event_summary: draft.event_summary.unwrap_or_default(),
            keywords: dedup_keywords(draft.keywords),
            page_range: Fragment::derived_page_range(&draft.spans),
            spans: draft.spans,
            interval: Interval::point(step),
        };
        let touched = fragment.entity_refs().cloned().collect();
        self.fragments.push(fragment.clone());
        self.layout_stale = true;
        self.log(OpKind::Create, OpTarget::Fragment, &id.0, OpPayload::Fragment { fragment }, touched);
        Ok(id)
    }

    pub fn update_fragment(&mut self, id: &FragmentId, patch: FragmentPatch) -> Result<&Fragment> {
        let idx = self.fragment_index(id)?;
        let persons = patch.persons.as_deref().map(|p| self.check_persons(p)).transpose()?;
        if let Some(Some(t)) = &patch.time {
            self.check_kind(t, EntityKind::Time)?;
        }
        if let Some(Some(p)) = &patch.place {
            self.check_kind(p, EntityKind::Place)?;
        }
        if let Some(spans) = &patch.spans {
            for s in spans {
                self.check_span(s)?;
            }
        }
        let f = &mut self.fragments[idx];
        if let Some(p) = persons {
            f.persons = p;
        }
        if let Some(t) = patch.time {
            f.time = t;
        }
        if let Some(p) = patch.place {
            f.place = p;
        }
        if let Some(s) = patch.event_summary {
            f.event_summary = s;
        }
        if let Some(k) = patch.keywords {
            f.keywords = dedup_keywords(k);
        }
        if let Some(s) = patch.spans {
            f.page_range = Fragment::derived_page_range(&s);
            f.spans = s;
        }
        let snapshot = f.clone();
        let touched = snapshot.entity_refs().cloned().collect();
        self.layout_stale = true;
        self.log(OpKind::Modify, OpTarget::Fragment, &id.0, OpPayload::Fragment { fragment: snapshot }, touched);
        Ok(&self.fragments[idx])
    }

    /// Moves or resizes a fragment on the story timeline.
    pub fn set_fragment_interval(&mut self, id: &FragmentId, start: i64, end: i64) -> Result<&Fragment> {
        let idx = self.fragment_index(id)?;
        if start < 0 || end < 0 || start > end {
            return Err(ModelError::InvalidInterval { start, end });
        }
        let f = &mut self.fragments[idx];
        f.interval = Interval::new(start as usize, end as usize);
        let snapshot = f.clone();
        self.layout_stale = true;
        self.log(OpKind::Drag, OpTarget::Fragment, &id.0, OpPayload::Fragment { fragment: snapshot }, Vec::new());
        Ok(&self.fragments[idx])
    }

    /// Folds fragment `b` into `a`: element unions, interval hull, a's
    /// time/place winning over b's. `b` is removed.
    pub fn merge_fragments(&mut self, a: &FragmentId, b: &FragmentId) -> Result<&Fragment> {
        if a == b {
            return Err(ModelError::SameFragment(a.clone()));
        }
        let ia = self.fragment_index(a)?;
        let ib = self.fragment_index(b)?;
        let fb = self.fragments[ib].clone();
        let fa = &mut self.fragments[ia];
        for p in &fb.persons {
            if !fa.persons.contains(p) {
                fa.persons.push(p.clone());
            }
        }
        for s in &fb.spans {
            if !fa.spans.contains(s) {
                fa.spans.push(*s);
            }
        }
        fa.keywords = dedup_keywords(fa.keywords.iter().chain(&fb.keywords).cloned().collect());
        fa.interval = Interval::new(fa.interval.start.min(fb.interval.start), fa.interval.end.max(fb.interval.end));
        if fa.time.is_none() {
            fa.time = fb.time.clone();
        }
        if fa.place.is_none() {
            fa.place = fb.place.clone();
        }
        fa.event_summary = match (fa.event_summary.trim(), fb.event_summary.trim()) {
            ("", s) | (s, "") => s.to_owned(),
            (x, y) => format!("{x} {y}"),
        };
        fa.page_range = Fragment::derived_page_range(&fa.spans);
        let merged = fa.clone();
        self.fragments.remove(ib);
        let touched = merged.entity_refs().cloned().collect();
        self.layout_stale = true;
        self.log(
            OpKind::Merge,
            OpTarget::Fragment,
            &a.0,
            OpPayload::Merged { fragment: merged, removed: b.clone() },
            touched,
        );
        let ia = self.fragment_index(a)?;
        Ok(&self.fragments[ia])
    }

    pub fn delete_fragment(&mut self, id: &FragmentId) -> Result<()> {
        let idx = self.fragment_index(id)?;
        self.fragments.remove(idx);
        self.layout_stale = true;
        self.log(OpKind::Delete, OpTarget::Fragment, &id.0, OpPayload::Removed, Vec::new());
        Ok(())
    }

    // ---- annotations ------------------------------------------------------

    pub fn add_annotation(
        &mut self,
        page_index: usize,
        gesture: GestureKind,
        spans: Vec<TextSpan>,
        entity: Option<EntityId>,
        strokes: Vec<Stroke>,
    ) -> Result<AnnotationId> {
        for s in &spans {
            if s.page_index != page_index {
                return Err(ModelError::InvalidSpan { span: *s });
            }
            self.check_span(s)?;
        }
        if let Some(e) = &entity {
            self.entity_index(e)?;
        }
        let created_ms = self.stamp();
        let id = AnnotationId(self.alloc_id('a'));
        let annotation = Annotation { id: id.clone(), page_index, gesture, spans, entity, created_ms, strokes };
        let touched = annotation.entity.iter().cloned().collect();
        self.annotations.push(annotation.clone());
        self.log(OpKind::Create, OpTarget::Annotation, &id.0, OpPayload::Annotation { annotation }, touched);
        Ok(id)
    }

    pub fn set_annotation_entity(&mut self, id: &AnnotationId, entity: Option<EntityId>) -> Result<()> {
        if let Some(e) = &entity {
            self.entity_index(e)?;
        }
        let a = self
            .annotations
            .iter_mut()
            .find(|a| &a.id == id)
            .ok_or_else(|| ModelError::UnknownAnnotation(id.clone()))?;
        a.entity = entity;
        let snapshot = a.clone();
        let touched = snapshot.entity.iter().cloned().collect();
        self.log(OpKind::Modify, OpTarget::Annotation, &id.0, OpPayload::Annotation { annotation: snapshot }, touched);
        Ok(())
    }

    pub fn remove_annotation(&mut self, id: &AnnotationId) -> Result<()> {
        let idx = self
            .annotations
            .iter()
            .position(|a| &a.id == id)
            .ok_or_else(|| ModelError::UnknownAnnotation(id.clone()))?;
        self.annotations.remove(idx);
        self.log(OpKind::Delete, OpTarget::Annotation, &id.0, OpPayload::Removed, Vec::new());
        Ok(())
    }

    // ---- operation cache --------------------------------------------------

    /// Up to `k` live entities, most recently touched first; never-touched
    /// entities follow in creation order.
    pub fn recent_entities(&self, k: usize) -> Vec<EntityId> {
        let live: HashSet<&EntityId> = self.entities.iter().map(|e| &e.id).collect();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for rec in self.op_log.iter().rev() {
            for id in &rec.touched {
                if live.contains(id) && seen.insert(id.clone()) {
                    out.push(id.clone());
                }
            }
        }
        for e in &self.entities {
            if seen.insert(e.id.clone()) {
                out.push(e.id.clone());
            }
        }
        out.truncate(k);
        out
    }

    fn stamp(&self) -> u64 {
        let last = self.op_log.last().map_or(0, |r| r.timestamp);
        now_ms().max(last)
    }

    fn alloc_id(&mut self, prefix: char) -> String {
        self.next_seq += 1;
        format!("{prefix}{}", self.next_seq)
    }

    fn log(&mut self, kind: OpKind, target: OpTarget, target_id: &str, payload: OpPayload, touched: Vec<EntityId>) {
        let timestamp = self.stamp();
        let seq = self.op_log.last().map_or(0, |r| r.seq + 1);
        self.op_log.push(OperationRecord {
            seq,
            timestamp,
            kind,
            target,
            target_id: target_id.to_owned(),
            payload,
            touched,
        });
    }

    // ---- invariants -------------------------------------------------------

    /// Checks every structural invariant; the message names the first
    /// violation found.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("document id is empty".into());
        }
        self.config.validate().map_err(|e| e.to_string())?;
        self.layout_params.validate().map_err(|e| e.to_string())?;
        let mut ids = HashSet::new();
        for e in &self.entities {
            if !ids.insert(e.id.0.clone()) {
                return Err(format!("duplicate id {}", e.id));
            }
            if e.canonical_name.trim().is_empty() {
                return Err(format!("entity {} has an empty name", e.id));
            }
            if !(0.0..=1.0).contains(&e.confidence) {
                return Err(format!("entity {} confidence {} outside [0,1]", e.id, e.confidence));
            }
            let folded = text::fold(&e.canonical_name);
            if e.aliases.iter().any(|a| text::fold(a) == folded) {
                return Err(format!("entity {} lists its own name as an alias", e.id));
            }
            let dup = self
                .entities
                .iter()
                .any(|o| o.id != e.id && o.kind == e.kind && text::fold(&o.canonical_name) == folded);
            if dup {
                return Err(format!("duplicate {} name {:?}", e.kind, e.canonical_name));
            }
        }
        for f in &self.fragments {
            if !ids.insert(f.id.0.clone()) {
                return Err(format!("duplicate id {}", f.id));
            }
            for p in &f.persons {
                self.check_kind(p, EntityKind::Person).map_err(|e| format!("fragment {}: {e}", f.id))?;
            }
            if let Some(t) = &f.time {
                self.check_kind(t, EntityKind::Time).map_err(|e| format!("fragment {}: {e}", f.id))?;
            }
            if let Some(p) = &f.place {
                self.check_kind(p, EntityKind::Place).map_err(|e| format!("fragment {}: {e}", f.id))?;
            }
            for s in &f.spans {
                self.check_span(s).map_err(|e| format!("fragment {}: {e}", f.id))?;
            }
            if f.page_range != Fragment::derived_page_range(&f.spans) {
                return Err(format!("fragment {} page range disagrees with its spans", f.id));
            }
            if f.interval.start > f.interval.end {
                return Err(format!("fragment {} has an inverted interval", f.id));
            }
        }
        for a in &self.annotations {
            if !ids.insert(a.id.0.clone()) {
                return Err(format!("duplicate id {}", a.id));
            }
            if let Some(e) = &a.entity {
                if self.entity(e).is_none() {
                    return Err(format!("annotation {} references unknown entity {e}", a.id));
                }
            }
            for s in &a.spans {
                if s.page_index != a.page_index {
                    return Err(format!("annotation {} spans another page", a.id));
                }
                self.check_span(s).map_err(|e| format!("annotation {}: {e}", a.id))?;
            }
        }
        if self.op_log.windows(2).any(|w| w[1].timestamp < w[0].timestamp || w[1].seq <= w[0].seq) {
            return Err("operation log is not monotone".into());
        }
        Ok(())
    }
}

fn dedup_keywords(keywords: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    keywords
        .into_iter()
        .map(|k| k.trim().to_owned())
        .filter(|k| !k.is_empty() && seen.insert(text::fold(k)))
        .collect()
}
