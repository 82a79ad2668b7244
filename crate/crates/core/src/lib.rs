//! Storyline authoring engine.
//!
//! The crate is split along the pipeline a reader walks through: ink on a page
//! is recognized and bound to text ([`gesture`]), entities are proposed by an
//! extraction provider ([`extract`]), entities and fragments live in a
//! versioned [`model::StoryDocument`], fragments are laid out as character
//! lines ([`layout`]) and finally drawn as SVG ([`render`]).

pub mod extract;
pub mod gesture;
pub mod layout;
pub mod model;
pub mod render;
pub mod text;

pub use extract::{
    CandidateEntity, ExtractError, ExtractionConfig, Provider, ProviderKind, RuleProvider,
    WeightedTerm,
};
pub use gesture::{GestureError, GestureKind, LineBox, RecognitionResult, Stroke, TemplateSet};
pub use layout::{LayoutError, LayoutParams, LayoutSpec, Metrics};
pub use model::{
    Entity, EntityId, EntityKind, EntitySource, Fragment, FragmentId, ModelError, PersistError,
    StoryDocument, TextSpan,
};
pub use render::SceneConfig;
