//! Document, entity and fragment model.
//!
//! Entities are referenced everywhere by id; names are display data only, so a
//! rename never has to rewrite a fragment.

mod document;
mod edit;
mod oplog;
mod paginate;
mod persist;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gesture::{GestureKind, Stroke};

pub use document::{DeleteOutcome, FragmentDraft, FragmentPatch, FragmentView, StoryDocument};
pub use edit::{EditReport, FragmentEdit};
pub use oplog::{OpKind, OpPayload, OpTarget, OperationRecord, ReplayState};
pub use paginate::{paginate, DEFAULT_PAGE_BUDGET};
pub use persist::{load_document, save_document, write_atomic, AtomicWrite, PersistError};

pub const SCHEMA_VERSION: u32 = 1;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(
    /// Opaque entity identifier, stable across renames.
    EntityId
);
id_type!(FragmentId);
id_type!(AnnotationId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Time,
    Place,
    Event,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [Self::Person, Self::Time, Self::Place, Self::Event];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Person => "person",
            Self::Time => "time",
            Self::Place => "place",
            Self::Event => "event",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "person" => Some(Self::Person),
            "time" => Some(Self::Time),
            "place" => Some(Self::Place),
            "event" => Some(Self::Event),
            _ => None,
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an entity came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntitySource {
    #[serde(rename = "strokeAnnotation")]
    StrokeAnnotation,
    #[serde(rename = "highlightAuto")]
    HighlightAuto,
    #[serde(rename = "providerLLM")]
    ProviderLlm,
    #[serde(rename = "providerRule")]
    ProviderRule,
    #[serde(rename = "manual")]
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub canonical_name: String,
    #[serde(default)]
    pub aliases: BTreeSet<String>,
    pub source: EntitySource,
    pub confidence: f64,
    pub color_key: u32,
}

impl Entity {
    /// True if `name` is this entity's canonical name or one of its aliases
    /// (case-insensitive).
    pub fn answers_to(&self, name: &str) -> bool {
        let folded = crate::text::fold(name);
        crate::text::fold(&self.canonical_name) == folded
            || self.aliases.iter().any(|a| crate::text::fold(a) == folded)
    }
}

/// Half-open code-point range `[start, end)` on one page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextSpan {
    pub page_index: usize,
    pub start: usize,
    pub end: usize,
}

impl TextSpan {
    pub fn new(page_index: usize, start: usize, end: usize) -> Self {
        Self { page_index, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(&self, other: &TextSpan) -> bool {
        self.page_index == other.page_index && self.start < other.end && other.start < self.end
    }
}

/// Closed interval of story-timeline steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn point(step: usize) -> Self {
        Self { start: step, end: step }
    }

    pub fn duration(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, step: usize) -> bool {
        self.start <= step && step <= self.end
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// The basic narrative unit: who, optionally when and where, and what happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Fragment {
    pub id: FragmentId,
    pub persons: Vec<EntityId>,
    #[serde(default)]
    pub time: Option<EntityId>,
    #[serde(default)]
    pub place: Option<EntityId>,
    #[serde(default)]
    pub event_summary: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub spans: Vec<TextSpan>,
    #[serde(default)]
    pub page_range: Option<[usize; 2]>,
    pub interval: Interval,
}

impl Fragment {
    /// A fragment whose last person was deleted stays in the document but is
    /// excluded from layout until the user resolves it.
    pub fn is_valid(&self) -> bool {
        !self.persons.is_empty()
    }

    pub fn references(&self, id: &EntityId) -> bool {
        self.persons.contains(id) || self.time.as_ref() == Some(id) || self.place.as_ref() == Some(id)
    }

    pub fn entity_refs(&self) -> impl Iterator<Item = &EntityId> {
        self.persons.iter().chain(self.time.iter()).chain(self.place.iter())
    }

    pub(crate) fn derived_page_range(spans: &[TextSpan]) -> Option<[usize; 2]> {
        let first = spans.iter().map(|s| s.page_index).min()?;
        let last = spans.iter().map(|s| s.page_index).max()?;
        Some([first, last])
    }
}

/// Ink on a page together with what it was resolved to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Annotation {
    pub id: AnnotationId,
    pub page_index: usize,
    pub gesture: GestureKind,
    pub spans: Vec<TextSpan>,
    #[serde(default)]
    pub entity: Option<EntityId>,
    pub created_ms: u64,
    #[serde(default)]
    pub strokes: Vec<Stroke>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("entity {id} is a {found}, expected {expected}")]
    WrongEntityKind { id: EntityId, expected: EntityKind, found: EntityKind },
    #[error("a fragment needs at least one person")]
    EmptyPersons,
    #[error("a {kind} named {name:?} already exists")]
    DuplicateName { kind: EntityKind, name: String },
    #[error("entity names must not be empty")]
    EmptyName,
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("unknown fragment {0}")]
    UnknownFragment(FragmentId),
    #[error("cannot merge fragment {0} with itself")]
    SameFragment(FragmentId),
    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: i64, end: i64 },
    #[error("span {span:?} is outside page bounds")]
    InvalidSpan { span: TextSpan },
    #[error("unknown annotation {0}")]
    UnknownAnnotation(AnnotationId),
    #[error("entity {0} is referenced by a fragment in a role that requires its current kind")]
    EntityInUse(EntityId),
}

impl ModelError {
    /// Stable error name used on the command line and in HTTP bodies.
    pub fn name(&self) -> &'static str {
        match self {
            Self::UnknownEntity(_) => "UnknownEntity",
            Self::WrongEntityKind { .. } => "WrongEntityKind",
            Self::EmptyPersons => "EmptyPersons",
            Self::DuplicateName { .. } => "DuplicateName",
            Self::EmptyName => "EmptyName",
            Self::InvalidConfidence(_) => "InvalidConfidence",
            Self::UnknownFragment(_) => "UnknownFragment",
            Self::SameFragment(_) => "SameFragment",
            Self::InvalidInterval { .. } => "InvalidInterval",
            Self::InvalidSpan { .. } => "InvalidSpan",
            Self::UnknownAnnotation(_) => "UnknownAnnotation",
            Self::EntityInUse(_) => "EntityInUse",
        }
    }
}
