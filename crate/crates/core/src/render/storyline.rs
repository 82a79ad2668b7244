use std::collections::HashMap;
use std::fmt::Write as _;

use super::{esc, num, svg_open, RenderError, SceneConfig};
use crate::layout::{LayoutSpec, LineSpec};
use crate::model::{EntityId, EntityKind, Fragment, StoryDocument};

/// An SVG document plus anything the renderer had to compromise on.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: String,
    pub warnings: Vec<String>,
}

/// Block padding as a fraction of one step and one unit.
const BLOCK_PAD_STEP: f64 = 0.3;
const BLOCK_PAD_UNIT: f64 = 0.6;
const STUB: f64 = 0.25;
const LEGEND_ITEM_WIDTH: f64 = 150.0;
const LEGEND_ROW: f64 = 20.0;
const LABEL_ROOM: f64 = 18.0;

/// Plot geometry shared by the layers: local x = step · pxPerStep and local
/// y = units · pxPerUnit, translated by (`tx`, `ty`).
struct Frame {
    tx: f64,
    ty: f64,
    pad_x: f64,
    pad_y: f64,
    top: f64,
    bottom: f64,
    plot_w: f64,
}

impl Frame {
    fn new(layout: &LayoutSpec, cfg: &SceneConfig) -> Self {
        let ys = layout
            .lines
            .iter()
            .flat_map(|l| l.segments.iter().map(|s| s.y))
            .chain(layout.blocks.iter().flat_map(|b| [b.y0, b.y1]))
            .chain(layout.blocks.iter().flat_map(|b| b.keyword_anchors.iter().map(|k| k.y)));
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in ys {
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        if !ymin.is_finite() {
            (ymin, ymax) = (0.0, 0.0);
        }
        let pad_x = cfg.px_per_step * BLOCK_PAD_STEP;
        let pad_y = cfg.px_per_unit * BLOCK_PAD_UNIT;
        let t = layout.steps.len();
        Self {
            tx: cfg.margin + pad_x.max(cfg.px_per_step * STUB),
            ty: cfg.margin + pad_y + LABEL_ROOM - ymin * cfg.px_per_unit,
            pad_x,
            pad_y,
            top: ymin * cfg.px_per_unit - pad_y - LABEL_ROOM,
            bottom: ymax * cfg.px_per_unit + pad_y + LABEL_ROOM,
            plot_w: t.saturating_sub(1) as f64 * cfg.px_per_step,
        }
    }
}

/// The whole storyline scene. Every person line is one path whose id is the
/// entity id; every fragment is one group whose id is the fragment id.
pub fn render_storyline(layout: &LayoutSpec, doc: &StoryDocument, cfg: &SceneConfig) -> Rendered {
    let frame = Frame::new(layout, cfg);
    let persons: Vec<_> = doc.entities().iter().filter(|e| e.kind == EntityKind::Person).collect();
    let per_row = (((frame.plot_w + 2.0 * frame.pad_x).max(4.0 * LEGEND_ITEM_WIDTH)) / LEGEND_ITEM_WIDTH).floor().max(1.0) as usize;
    let rows = persons.len().div_ceil(per_row);
    let width = 2.0 * frame.tx + frame.plot_w;
    let legend_y = frame.ty + frame.bottom + 10.0;
    let height = legend_y + rows as f64 * LEGEND_ROW + cfg.margin;

    let mut body = String::new();
    let _ = writeln!(body, r#"<g id="plot" transform="translate({},{})">"#, num(frame.tx), num(frame.ty));
    axis_layer(&mut body, layout, cfg, &frame);
    body.push_str(&location_bands(layout, doc.fragments(), cfg, &frame));
    let marks = time_marks(layout, doc);
    body.push_str(&time_layer(&marks, cfg, &frame));
    lines_layer(&mut body, layout, doc, cfg);
    blocks_layer(&mut body, layout, doc, cfg, &frame);
    body.push_str("</g>\n");

    let _ = writeln!(body, r#"<g id="layer-legend" transform="translate({},{})">"#, num(cfg.margin), num(legend_y));
    for (i, p) in persons.iter().enumerate() {
        let x = (i % per_row) as f64 * LEGEND_ITEM_WIDTH;
        let y = (i / per_row) as f64 * LEGEND_ROW;
        let _ = writeln!(
            body,
            r#"<g id="legend-{id}" class="legend-item" transform="translate({x},{y})"><rect width="12" height="12" fill="{c}"/><text x="16" y="10" font-size="{fs}">{name}</text></g>"#,
            id = esc(p.id.as_str()),
            x = num(x),
            y = num(y),
            c = esc(cfg.color(p.color_key)),
            fs = num(cfg.font.size),
            name = esc(&p.canonical_name),
        );
    }
    body.push_str("</g>\n");

    let mut warnings = Vec::new();
    let mut svg = String::new();
    match cfg.viewport {
        Some(vp) if vp.width > 0.0 && vp.height > 0.0 && (width > vp.width || height > vp.height) => {
            let scale = (vp.width / width).min(vp.height / height);
            let msg = format!("ViewportTooSmall: scene {}x{} scaled by {}", num(width), num(height), num(scale));
            svg_open(&mut svg, vp.width, vp.height, "storyline");
            let _ = writeln!(svg, r#"<desc id="warning">{}</desc>"#, esc(&msg));
            let _ = writeln!(svg, r#"<g id="scene" transform="scale({})">"#, scale);
            svg.push_str(&body);
            svg.push_str("</g>\n");
            warnings.push(msg);
        }
        _ => {
            svg_open(&mut svg, width, height, "storyline");
            let _ = writeln!(svg, r#"<g id="scene">"#);
            svg.push_str(&body);
            svg.push_str("</g>\n");
        }
    }
    let _ = writeln!(svg, r#"<style>text{{font-family:{}}}</style>"#, esc(&cfg.font.family));
    svg.push_str("</svg>\n");
    Rendered { svg, warnings }
}

fn axis_layer(out: &mut String, layout: &LayoutSpec, cfg: &SceneConfig, frame: &Frame) {
    let _ = writeln!(out, r##"<g id="layer-axis" stroke="#bbbbbb">"##);
    let _ = writeln!(
        out,
        r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}"/>"#,
        num(-frame.pad_x),
        num(frame.plot_w + frame.pad_x),
        y = num(frame.bottom),
    );
    for st in &layout.steps {
        let x = st.index as f64 * cfg.px_per_step;
        let _ = writeln!(
            out,
            r##"<text class="step-label" x="{x}" y="{y}" text-anchor="middle" font-size="{fs}" stroke="none" fill="#888888">{label}</text>"##,
            x = num(x),
            y = num(frame.bottom + 14.0),
            fs = num(cfg.font.size * 0.8),
            label = st.source_steps.first().copied().unwrap_or(st.index),
        );
    }
    out.push_str("</g>\n");
}

/// Marked steps with their labels: steps holding a fragment with a time
/// entity, labelled with that entity's name.
fn time_marks(layout: &LayoutSpec, doc: &StoryDocument) -> Vec<(usize, String)> {
    let mut marks = Vec::new();
    for st in &layout.steps {
        let mut names: Vec<&str> = Vec::new();
        for s in &st.sessions {
            if let Some(t) = doc.fragment(&s.fragment_id).and_then(|f| f.time.as_ref()) {
                let n = doc.display_name(t).unwrap_or(t.as_str());
                if !names.contains(&n) {
                    names.push(n);
                }
            }
        }
        if !names.is_empty() {
            marks.push((st.index, names.join(" / ")));
        }
    }
    marks
}

fn time_layer(marks: &[(usize, String)], cfg: &SceneConfig, frame: &Frame) -> String {
    let mut out = String::from("<g id=\"layer-timepoints\">\n");
    for (step, label) in marks {
        let x = num(*step as f64 * cfg.px_per_step);
        let _ = writeln!(
            out,
            r##"<g id="time-{step}" class="time-point"><line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#999999" stroke-dasharray="4 3"/><text x="{x}" y="{ty}" text-anchor="middle" font-size="{fs}" fill="#555555">{label}</text></g>"##,
            y0 = num(frame.top + LABEL_ROOM * 0.5),
            y1 = num(frame.bottom),
            ty = num(frame.top + LABEL_ROOM * 0.5 - 4.0),
            fs = num(cfg.font.size * 0.8),
            label = esc(label),
        );
    }
    out.push_str("</g>\n");
    out
}

/// Vertical tick and label per marked step, in plot coordinates
/// (x = step · pxPerStep). Labels are the steps' source values.
pub fn render_time_points(layout: &LayoutSpec, marked: &[usize], cfg: &SceneConfig) -> Result<String, RenderError> {
    let mut marks = Vec::new();
    for &m in marked {
        let st = layout.steps.iter().find(|s| s.index == m).ok_or(RenderError::UnknownStep(m))?;
        marks.push((m, format!("t{}", st.source_steps.first().copied().unwrap_or(m))));
    }
    Ok(time_layer(&marks, cfg, &Frame::new(layout, cfg)))
}

/// Translucent bands behind fragments that have a place. Fragments sharing
/// a place share a color; places are colored in order of first appearance.
pub fn render_location_bands(layout: &LayoutSpec, fragments: &[Fragment], cfg: &SceneConfig) -> String {
    location_bands(layout, fragments, cfg, &Frame::new(layout, cfg))
}

fn location_bands(layout: &LayoutSpec, fragments: &[Fragment], cfg: &SceneConfig, frame: &Frame) -> String {
    let mut color_of: HashMap<&EntityId, usize> = HashMap::new();
    let mut out = String::from("<g id=\"layer-bands\">\n");
    for b in &layout.blocks {
        let Some(f) = fragments.iter().find(|f| f.id == b.fragment_id) else { continue };
        let Some(place) = f.place.as_ref() else { continue };
        let n = color_of.len();
        let slot = *color_of.entry(place).or_insert(n);
        let color = &cfg.palette[(1 + slot) % cfg.palette.len()];
        let (px, py) = (frame.pad_x * 1.5, frame.pad_y * 2.0);
        let _ = writeln!(
            out,
            r#"<rect id="band-{id}" class="location-band" data-place="{place}" x="{x}" y="{y}" width="{w}" height="{h}" rx="8" fill="{color}" fill-opacity="0.18"/>"#,
            id = esc(b.fragment_id.as_str()),
            place = esc(place.as_str()),
            x = num(b.x0 * cfg.px_per_step - px),
            y = num(b.y0 * cfg.px_per_unit - py),
            w = num((b.x1 - b.x0) * cfg.px_per_step + 2.0 * px),
            h = num((b.y1 - b.y0) * cfg.px_per_unit + 2.0 * py),
            color = esc(color),
        );
    }
    out.push_str("</g>\n");
    out
}

/// Path data: each run of consecutive steps is a subpath of cubic segments
/// with horizontal tangents at every step, extended by a short stub at both
/// ends. x never decreases along the path.
pub(crate) fn line_path(line: &LineSpec, cfg: &SceneConfig) -> String {
    let mut d = String::new();
    let segs = &line.segments;
    let mut i = 0;
    while i < segs.len() {
        let mut j = i;
        while j + 1 < segs.len() && segs[j + 1].step == segs[j].step + 1 {
            j += 1;
        }
        let px = |k: usize| segs[k].step as f64 * cfg.px_per_step;
        let py = |k: usize| segs[k].y * cfg.px_per_unit;
        let stub = cfg.px_per_step * STUB;
        if !d.is_empty() {
            d.push(' ');
        }
        let _ = write!(d, "M{} {} L{} {}", num(px(i) - stub), num(py(i)), num(px(i)), num(py(i)));
        for k in i + 1..=j {
            let mid = (px(k - 1) + px(k)) / 2.0;
            let _ = write!(d, " C{} {} {} {} {} {}", num(mid), num(py(k - 1)), num(mid), num(py(k)), num(px(k)), num(py(k)));
        }
        let _ = write!(d, " L{} {}", num(px(j) + stub), num(py(j)));
        i = j + 1;
    }
    d
}

fn lines_layer(out: &mut String, layout: &LayoutSpec, doc: &StoryDocument, cfg: &SceneConfig) {
    out.push_str("<g id=\"layer-lines\" fill=\"none\" stroke-width=\"2.5\" stroke-linecap=\"round\">\n");
    for (i, line) in layout.lines.iter().enumerate() {
        if line.segments.is_empty() {
            continue;
        }
        let e = doc.entity(&line.entity_id);
        let color = e.map_or_else(|| cfg.palette[i % cfg.palette.len()].as_str(), |e| cfg.color(e.color_key));
        let name = e.map_or(line.entity_id.as_str(), |e| e.canonical_name.as_str());
        let _ = writeln!(
            out,
            r#"<path id="{id}" class="character-line" data-name="{name}" stroke="{color}" d="{d}"/>"#,
            id = esc(line.entity_id.as_str()),
            name = esc(name),
            color = esc(color),
            d = line_path(line, cfg),
        );
    }
    out.push_str("</g>\n");
}

fn blocks_layer(out: &mut String, layout: &LayoutSpec, doc: &StoryDocument, cfg: &SceneConfig, frame: &Frame) {
    out.push_str("<g id=\"layer-blocks\">\n");
    for b in &layout.blocks {
        let f = doc.fragment(&b.fragment_id);
        let x = b.x0 * cfg.px_per_step - frame.pad_x;
        let y = b.y0 * cfg.px_per_unit - frame.pad_y;
        let w = (b.x1 - b.x0) * cfg.px_per_step + 2.0 * frame.pad_x;
        let h = (b.y1 - b.y0) * cfg.px_per_unit + 2.0 * frame.pad_y;
        let label = f.map(|f| f.event_summary.as_str()).filter(|s| !s.is_empty()).unwrap_or(b.fragment_id.as_str());
        let label: String = if crate::text::char_len(label) > 40 {
            label.chars().take(39).chain(std::iter::once('…')).collect()
        } else {
            label.to_owned()
        };
        let _ = writeln!(
            out,
            r##"<g id="{id}" class="block"><rect x="{x}" y="{y}" width="{w}" height="{h}" rx="6" fill="#ffffff" fill-opacity="0.2" stroke="#444444" stroke-width="1"/><text class="block-label" x="{lx}" y="{ly}" font-size="{fs}">{label}</text>"##,
            id = esc(b.fragment_id.as_str()),
            x = num(x),
            y = num(y),
            w = num(w),
            h = num(h),
            lx = num(x),
            ly = num(y - 4.0),
            fs = num(cfg.font.size),
            label = esc(&label),
        );
        for k in &b.keyword_anchors {
            let _ = writeln!(
                out,
                r##"<text class="keyword" x="{x}" y="{y}" text-anchor="middle" font-size="{fs}" fill="#333333">{t}</text>"##,
                x = num(k.x * cfg.px_per_step),
                y = num(k.y * cfg.px_per_unit + frame.pad_y + 4.0),
                fs = num(cfg.font.size * 0.85),
                t = esc(&k.term),
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");
}
