use std::fmt::Write as _;

use super::wordcloud::{layout_wordcloud, Region, Rotation};
use super::{esc, num, svg_open, SceneConfig};
use crate::extract::{keyword_weights_all, LevelWeights, WeightedTerm};
use crate::model::{Fragment, StoryDocument};

/// Point on a circle; angles in degrees, clockwise from twelve o'clock.
fn polar(cx: f64, cy: f64, r: f64, deg: f64) -> (f64, f64) {
    let a = (deg - 90.0).to_radians();
    (cx + r * a.cos(), cy + r * a.sin())
}

/// Arc path from `start` sweeping `sweep` degrees clockwise. Full circles are
/// split in two because a single SVG arc cannot close on itself.
fn arc(cx: f64, cy: f64, r: f64, start: f64, sweep: f64) -> String {
    if sweep <= 0.0 {
        return String::new();
    }
    if sweep >= 359.999 {
        let (x0, y0) = polar(cx, cy, r, start);
        let (x1, y1) = polar(cx, cy, r, start + 180.0);
        let rr = num(r);
        return format!(
            "M{} {} A{rr} {rr} 0 0 1 {} {} A{rr} {rr} 0 0 1 {} {}",
            num(x0),
            num(y0),
            num(x1),
            num(y1),
            num(x0),
            num(y0)
        );
    }
    let (x0, y0) = polar(cx, cy, r, start);
    let (x1, y1) = polar(cx, cy, r, start + sweep);
    let large = u8::from(sweep > 180.0);
    format!("M{} {} A{r} {r} 0 {large} 1 {} {}", num(x0), num(y0), num(x1), num(y1), r = num(r))
}

fn wrap(text: &str, max_chars: usize) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut cur = String::new();
    for w in text.split_whitespace() {
        if !cur.is_empty() && crate::text::char_len(&cur) + 1 + crate::text::char_len(w) > max_chars {
            lines.push(std::mem::take(&mut cur));
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(w);
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    lines
}

/// Circular overview of one fragment. The outer arc covers the fragment's
/// share of the book's pages, the inner ring has one equal sector per person,
/// the disc holds a word cloud of the fragment keywords and the event summary
/// sits underneath.
pub fn render_fragment_diagram(fragment: &Fragment, doc: &StoryDocument, cfg: &SceneConfig) -> String {
    let size = cfg.diagram_size;
    let (cx, cy) = (size / 2.0, size / 2.0);
    let r_outer = size * 0.46;
    let r_inner = size * 0.39;
    let r_disc = size * 0.33;
    let summary_lines = wrap(&fragment.event_summary, ((size - 20.0) / (cfg.font.size * cfg.font.char_width)).max(8.0) as usize);
    let height = size + 10.0 + summary_lines.len() as f64 * cfg.font.size * 1.3 + 10.0;

    let mut out = String::new();
    svg_open(&mut out, size, height, "fragment-diagram");
    let _ = writeln!(out, r#"<g id="diagram-{}">"#, esc(fragment.id.as_str()));

    let total = doc.pages.len().max(1);
    let (first, last) = match fragment.page_range {
        Some([a, b]) => (a, b),
        None => (0, 0),
    };
    let sweep = if fragment.page_range.is_some() {
        (360.0 * (last - first + 1) as f64 / total as f64).min(360.0)
    } else {
        0.0
    };
    let start = 360.0 * first as f64 / total as f64;
    let _ = writeln!(
        out,
        r##"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="#e5e5e5" stroke-width="6"/>"##,
        c = num(cx),
        r = num(r_outer)
    );
    let _ = writeln!(
        out,
        r##"<path id="outer-arc" class="page-arc" data-sweep="{}" data-pages="{}-{}" d="{}" fill="none" stroke="#555555" stroke-width="6"/>"##,
        num(sweep),
        first,
        last,
        arc(cx, cy, r_outer, start, sweep)
    );

    let n = fragment.persons.len();
    out.push_str("<g id=\"inner-arc\">\n");
    for (i, p) in fragment.persons.iter().enumerate() {
        let each = 360.0 / n as f64;
        let color = doc.entity(p).map_or(cfg.palette[0].as_str(), |e| cfg.color(e.color_key));
        let name = doc.display_name(p).unwrap_or(p.as_str());
        // a hair of space between sectors unless there is only one
        let gap = if n > 1 { 1.5 } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<path id="sector-{id}" class="person-sector" data-sweep="{sw}" d="{d}" fill="none" stroke="{color}" stroke-width="10"><title>{name}</title></path>"#,
            id = esc(p.as_str()),
            sw = num(each),
            d = arc(cx, cy, r_inner, i as f64 * each + gap / 2.0, each - gap),
            color = esc(color),
            name = esc(name),
        );
    }
    out.push_str("</g>\n");

    let side = r_disc * std::f64::consts::SQRT_2;
    let region = Region { x: cx - side / 2.0, y: cy - side / 2.0, width: side, height: side };
    let terms = cloud_terms(fragment, doc);
    let cloud = layout_wordcloud(&terms, region, &cfg.font);
    let _ = writeln!(
        out,
        r#"<g id="cloud" data-x="{}" data-y="{}" data-width="{}" data-height="{}" data-skipped="{}">"#,
        num(region.x),
        num(region.y),
        num(region.width),
        num(region.height),
        esc(&cloud.skipped.join(" "))
    );
    for p in &cloud.placed {
        let rotate = match p.rotation {
            Rotation::Horizontal => String::new(),
            Rotation::Vertical => format!(r#" transform="rotate(90 {} {})""#, num(p.x), num(p.y)),
        };
        let _ = writeln!(
            out,
            r#"<text class="cloud-term" x="{}" y="{}" font-size="{}" text-anchor="middle" dominant-baseline="central"{rotate}>{}</text>"#,
            num(p.x),
            num(p.y),
            num(p.font_size),
            esc(&p.term)
        );
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r#"<text id="summary" x="10" y="{}" font-size="{}">"#, num(size + 10.0), num(cfg.font.size));
    for (i, line) in summary_lines.iter().enumerate() {
        let _ = writeln!(out, r#"<tspan x="10" dy="{}">{}</tspan>"#, if i == 0 { "0".into() } else { num(cfg.font.size * 1.3) }, esc(line));
    }
    out.push_str("</text>\n</g>\n</svg>\n");
    out
}

/// Fragment keywords weighted by their annotation level in the fragment
/// text; keywords absent from the text get weight 1.
fn cloud_terms(fragment: &Fragment, doc: &StoryDocument) -> Vec<WeightedTerm> {
    let text = doc.fragment_text(fragment);
    let names: Vec<String> = fragment.persons.iter().filter_map(|p| doc.display_name(p)).map(str::to_owned).collect();
    let weights = keyword_weights_all(&text, &[], &names, &LevelWeights::default()).unwrap_or_default();
    fragment
        .keywords
        .iter()
        .map(|k| {
            let w = weights.iter().find(|w| w.term == k.to_lowercase()).map_or(1.0, |w| w.weight);
            WeightedTerm { term: k.clone(), weight: w }
        })
        .collect()
}
