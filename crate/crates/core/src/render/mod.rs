//! SVG scenes for layouts and fragments.
//!
//! Element ids are the document's entity and fragment ids, so a client can
//! bind interactions straight to the emitted markup. Layers are stacked
//! bands, time points, lines, blocks and legend, bottom to top.

mod diagram;
mod minimap;
mod storyline;
mod wordcloud;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagram::render_fragment_diagram;
pub use minimap::{render_minimap, Minimap, Window};
pub use storyline::{render_location_bands, render_storyline, render_time_points, Rendered};
pub use wordcloud::{layout_wordcloud, CloudLayout, Region, Rotation, WordCloudPlacement};

/// Persons take slot 0 (red) and then slots 2 onward; slot 1 (green) is
/// reserved for places.
pub const DEFAULT_PALETTE: [&str; 10] = [
    "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FontMetrics {
    pub family: String,
    pub size: f64,
    /// Average glyph advance as a fraction of the font size.
    pub char_width: f64,
    pub cloud_min_size: f64,
    pub cloud_max_size: f64,
}

impl Default for FontMetrics {
    fn default() -> Self {
        Self { family: "sans-serif".into(), size: 12.0, char_width: 0.6, cloud_min_size: 10.0, cloud_max_size: 28.0 }
    }
}

impl FontMetrics {
    pub fn text_width(&self, text: &str, size: f64) -> f64 {
        crate::text::char_len(text) as f64 * size * self.char_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SceneConfig {
    pub px_per_step: f64,
    pub px_per_unit: f64,
    pub palette: Vec<String>,
    pub font: FontMetrics,
    /// Fixed output size; a larger scene is scaled down to fit.
    pub viewport: Option<Viewport>,
    pub margin: f64,
    pub minimap: Viewport,
    pub diagram_size: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            px_per_step: 120.0,
            px_per_unit: 14.0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            font: FontMetrics::default(),
            viewport: None,
            margin: 40.0,
            minimap: Viewport { width: 240.0, height: 60.0 },
            diagram_size: 360.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.px_per_step) || !positive(self.px_per_unit) || !positive(self.font.size) {
            return Err(RenderError::InvalidConfig("scales must be positive".into()));
        }
        if self.palette.len() < 8 {
            return Err(RenderError::InvalidConfig("palette needs at least 8 colors".into()));
        }
        if !(self.font.cloud_min_size > 0.0 && self.font.cloud_min_size <= self.font.cloud_max_size) {
            return Err(RenderError::InvalidConfig("cloud font sizes must satisfy 0 < min <= max".into()));
        }
        Ok(())
    }

    pub fn color(&self, key: u32) -> &str {
        &self.palette[key as usize % self.palette.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("step {0} is not in the layout")]
    UnknownStep(usize),
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
}

impl RenderError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::UnknownStep(_) => "UnknownStep",
            Self::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

/// Formats a coordinate with at most two decimals and no trailing zeros.
pub(crate) fn num(v: f64) -> String {
    let v = if v.abs() < 0.005 { 0.0 } else { v };
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_owned()
}

pub(crate) fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

/// Opening `<svg>` element for a `width` x `height` scene.
pub(crate) fn svg_open(out: &mut String, width: f64, height: f64, class: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" class="{class}" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height),
    );
}
