//! Ink gestures: multistroke template recognition and binding of ink to the
//! text lines underneath it.

mod binding;
mod recognizer;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binding::{
    bind_to_lines, bind_to_spans, classify_position, merge_multiline, BBox, BindingConfig, BoundLine,
    GlyphBox, LineBox, LinePosition, PendingSpan,
};
pub use recognizer::{
    distance_at_best_angle, normalize, path_distance, prototype_ink, recognize, rotate_by, GestureTemplate,
    RecognitionResult, TemplateSet, UserTemplate, Vec2, ANGLE_PRECISION_DEG, ANGLE_RANGE_DEG,
    RESAMPLE_POINTS, SQUARE_SIZE,
};

/// One sampled ink point in page pixels (y grows downward), `t` in ms.
/// On the wire a point is the triple `[x, y, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl From<[f64; 3]> for Point {
    fn from([x, y, t]: [f64; 3]) -> Self {
        Self { x, y, t }
    }
}

impl From<Point> for [f64; 3] {
    fn from(p: Point) -> Self {
        [p.x, p.y, p.t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stroke {
    pub points: Vec<Point>,
}

impl Stroke {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    /// Builds a stroke from `(x, y)` pairs with timestamps 10 ms apart.
    pub fn from_xy(xy: &[(f64, f64)]) -> Self {
        Self {
            points: xy
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Point { x, y, t: i as f64 * 10.0 })
                .collect(),
        }
    }
}

/// Gesture classes and the reading action each one triggers: underline
/// selects an entity, a box highlights a passage, a cross deletes an entity
/// occurrence, and a circle opens the modify dialog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GestureKind {
    Underline,
    HighlightBox,
    StrikeDelete,
    CircleModify,
}

impl GestureKind {
    pub const ALL: [GestureKind; 4] = [Self::Underline, Self::HighlightBox, Self::StrikeDelete, Self::CircleModify];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Underline => "underline",
            Self::HighlightBox => "highlightBox",
            Self::StrikeDelete => "strikeDelete",
            Self::CircleModify => "circleModify",
        }
    }
}

impl fmt::Display for GestureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GestureError {
    #[error("ink is degenerate (fewer than two distinct points)")]
    DegenerateInk,
    #[error("no gesture templates registered")]
    NoTemplates,
    #[error("no text under the stroke")]
    NoTextUnderStroke,
}

impl GestureError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DegenerateInk => "DegenerateInk",
            Self::NoTemplates => "NoTemplates",
            Self::NoTextUnderStroke => "NoTextUnderStroke",
        }
    }
}
