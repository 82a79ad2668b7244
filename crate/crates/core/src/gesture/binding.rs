//! Maps recognized ink onto the text lines it marks.

use serde::{Deserialize, Serialize};

use super::{GestureError, Stroke};
use crate::model::TextSpan;
use crate::text::is_word_char;

/// Horizontal extent of one character on a rendered line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GlyphBox {
    /// Code-point offset of the character within the page.
    pub offset: usize,
    pub x0: f64,
    pub x1: f64,
}

/// Geometry of one rendered text line, as measured by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineBox {
    pub line_index: usize,
    pub baseline_y: f64,
    pub top_y: f64,
    pub bottom_y: f64,
    pub glyphs: Vec<GlyphBox>,
}

impl LineBox {
    pub fn line_height(&self) -> f64 {
        self.bottom_y - self.top_y
    }

    pub fn is_well_formed(&self) -> bool {
        self.top_y < self.baseline_y && self.baseline_y <= self.bottom_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of_strokes(strokes: &[Stroke]) -> Option<Self> {
        let mut it = strokes.iter().flat_map(|s| &s.points);
        let first = it.next()?;
        let init = BBox { min_x: first.x, min_y: first.y, max_x: first.x, max_y: first.y };
        Some(it.fold(init, |b, p| BBox {
            min_x: b.min_x.min(p.x),
            min_y: b.min_y.min(p.y),
            max_x: b.max_x.max(p.x),
            max_y: b.max_y.max(p.y),
        }))
    }

    pub fn center_y(&self) -> f64 {
        0.5 * (self.min_y + self.max_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinePosition {
    Top,
    Middle,
    Bottom,
    None,
}

/// Tolerances for binding ink to text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BindingConfig {
    /// Band above the top and below the bottom of a line, in line heights.
    pub band_tolerance: f64,
    /// Fraction of a glyph's width the stroke must cover to select it.
    pub glyph_overlap: f64,
    /// Maximum pause between the parts of a multi-line mark.
    pub merge_window_ms: f64,
}

impl Default for BindingConfig {
    fn default() -> Self {
        Self { band_tolerance: 0.6, glyph_overlap: 0.5, merge_window_ms: 3000.0 }
    }
}

/// Where the stroke's vertical center sits relative to a line.
pub fn classify_position(stroke: &BBox, line: &LineBox, cfg: &BindingConfig) -> LinePosition {
    let c = stroke.center_y();
    let band = cfg.band_tolerance * line.line_height();
    if c >= line.baseline_y && c <= line.bottom_y + band {
        LinePosition::Bottom
    } else if c >= line.top_y && c < line.baseline_y {
        LinePosition::Middle
    } else if c >= line.top_y - band && c < line.top_y {
        LinePosition::Top
    } else {
        LinePosition::None
    }
}

/// A bound span plus the line it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundLine {
    pub span: TextSpan,
    pub line_index: usize,
    pub position: LinePosition,
    /// First and one-past-last alphanumeric offsets of the line.
    pub line_start: usize,
    pub line_end: usize,
}

/// Binds a stroke to text on the lines it marks.
///
/// Lines where the stroke sits in the middle or below the baseline win; a
/// stroke that only qualifies as "above" some line binds to those lines.
/// Glyphs covered for at least `glyph_overlap` of their width are selected,
/// trimmed of surrounding spaces and punctuation, and widened to whole words.
pub fn bind_to_lines(
    strokes: &[Stroke],
    page_index: usize,
    lines: &[LineBox],
    page_text: &str,
    cfg: &BindingConfig,
) -> Result<Vec<BoundLine>, GestureError> {
    let bbox = BBox::of_strokes(strokes).ok_or(GestureError::DegenerateInk)?;
    let chars: Vec<char> = page_text.chars().collect();
    let classified: Vec<(usize, LinePosition)> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_well_formed())
        .map(|(i, l)| (i, classify_position(&bbox, l, cfg)))
        .filter(|(_, p)| *p != LinePosition::None)
        .collect();
    let preferred: Vec<_> = classified.iter().filter(|(_, p)| *p != LinePosition::Top).copied().collect();
    let chosen = if preferred.is_empty() { classified } else { preferred };

    let mut out = Vec::new();
    for (li, position) in chosen {
        let line = &lines[li];
        let Some((line_start, line_end)) = content_bounds(line, &chars) else { continue };
        let selected: Vec<usize> = line
            .glyphs
            .iter()
            .filter(|g| g.offset < chars.len())
            .filter(|g| {
                let width = g.x1 - g.x0;
                let overlap = g.x1.min(bbox.max_x) - g.x0.max(bbox.min_x);
                width > 0.0 && overlap >= cfg.glyph_overlap * width
            })
            .map(|g| g.offset)
            .collect();
        let (Some(&lo), Some(&hi)) = (selected.iter().min(), selected.iter().max()) else { continue };
        let mut start = lo;
        let mut end = hi + 1;
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        if start >= end {
            continue;
        }
        while start > line_start && is_word_char(chars[start - 1]) {
            start -= 1;
        }
        while end < line_end && is_word_char(chars[end]) {
            end += 1;
        }
        out.push(BoundLine {
            span: TextSpan::new(page_index, start, end),
            line_index: line.line_index,
            position,
            line_start,
            line_end,
        });
    }
    if out.is_empty() {
        return Err(GestureError::NoTextUnderStroke);
    }
    out.sort_by_key(|b| b.span);
    Ok(out)
}

/// Spans only; see [`bind_to_lines`].
pub fn bind_to_spans(
    strokes: &[Stroke],
    page_index: usize,
    lines: &[LineBox],
    page_text: &str,
    cfg: &BindingConfig,
) -> Result<Vec<TextSpan>, GestureError> {
    Ok(bind_to_lines(strokes, page_index, lines, page_text, cfg)?.into_iter().map(|b| b.span).collect())
}

fn content_bounds(line: &LineBox, chars: &[char]) -> Option<(usize, usize)> {
    let visible = |g: &&GlyphBox| g.offset < chars.len() && chars[g.offset].is_alphanumeric();
    let start = line.glyphs.iter().filter(visible).map(|g| g.offset).min()?;
    let end = line.glyphs.iter().filter(visible).map(|g| g.offset).max()? + 1;
    Some((start, end))
}

/// A bound span waiting to be grouped into an entity mark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PendingSpan {
    pub span: TextSpan,
    pub line_index: usize,
    pub line_start: usize,
    pub line_end: usize,
    pub created_ms: f64,
}

impl PendingSpan {
    pub fn from_bound(b: &BoundLine, created_ms: f64) -> Self {
        Self { span: b.span, line_index: b.line_index, line_start: b.line_start, line_end: b.line_end, created_ms }
    }
}

/// Groups consecutive spans that continue one mark across a line break:
/// made within the merge window, on adjacent lines of the same page, and
/// either the earlier span runs to its line end or the later one starts its
/// line.
pub fn merge_multiline(pending: &[PendingSpan], cfg: &BindingConfig) -> Vec<Vec<TextSpan>> {
    let mut groups: Vec<Vec<TextSpan>> = Vec::new();
    let mut prev: Option<&PendingSpan> = None;
    for p in pending {
        let continues = prev.is_some_and(|q| {
            p.created_ms - q.created_ms <= cfg.merge_window_ms
                && p.created_ms >= q.created_ms
                && p.span.page_index == q.span.page_index
                && p.line_index == q.line_index + 1
                && (q.span.end >= q.line_end || p.span.start <= p.line_start)
        });
        match groups.last_mut() {
            Some(g) if continues => g.push(p.span),
            _ => groups.push(vec![p.span]),
        }
        prev = Some(p);
    }
    groups
}
