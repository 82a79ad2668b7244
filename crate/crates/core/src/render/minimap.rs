use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{esc, num, svg_open, SceneConfig};
use crate::layout::LayoutSpec;

/// A rectangle in layout coordinates: x in steps, y in layout units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimap {
    pub svg: String,
    /// The window as drawn, clamped into the layout extent.
    pub window: Window,
    pub extent: Window,
}

/// Layout extent: half a step beyond the first and last step, one unit
/// beyond the outermost lines.
pub(crate) fn extent(layout: &LayoutSpec) -> Window {
    let ys: Vec<f64> = layout.lines.iter().flat_map(|l| l.segments.iter().map(|s| s.y)).collect();
    if layout.steps.is_empty() || ys.is_empty() {
        return Window { x: 0.0, y: 0.0, width: 1.0, height: 1.0 };
    }
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    Window { x: -0.5, y: ymin, width: layout.steps.len() as f64, height: ymax - ymin }
}

fn clamp_window(w: Window, ext: Window) -> Window {
    let width = w.width.clamp(0.0, ext.width);
    let height = w.height.clamp(0.0, ext.height);
    Window {
        x: w.x.clamp(ext.x, ext.x + ext.width - width),
        y: w.y.clamp(ext.y, ext.y + ext.height - height),
        width,
        height,
    }
}

/// The whole layout shrunk to the configured mini-map size, with the
/// viewport window drawn on top.
pub fn render_minimap(layout: &LayoutSpec, window: Window, cfg: &SceneConfig) -> Minimap {
    let (mw, mh) = (cfg.minimap.width, cfg.minimap.height);
    let ext = extent(layout);
    let win = clamp_window(window, ext);
    let sx = mw / ext.width;
    let sy = mh / ext.height;
    let px = |x: f64| (x - ext.x) * sx;
    let py = |y: f64| (y - ext.y) * sy;

    let mut out = String::new();
    svg_open(&mut out, mw, mh, "minimap");
    let _ = writeln!(out, r##"<rect id="minimap-frame" x="0" y="0" width="{}" height="{}" fill="#fafafa" stroke="#cccccc"/>"##, num(mw), num(mh));
    out.push_str("<g id=\"minimap-lines\" fill=\"none\" stroke=\"#777777\" stroke-width=\"1\">\n");
    for line in &layout.lines {
        if line.segments.is_empty() {
            continue;
        }
        let pts: Vec<String> = line
            .segments
            .iter()
            .map(|s| format!("{},{}", num(px(s.step as f64)), num(py(s.y))))
            .collect();
        let _ = writeln!(out, r#"<polyline id="mini-{}" points="{}"/>"#, esc(line.entity_id.as_str()), pts.join(" "));
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r##"<rect id="minimap-window" x="{}" y="{}" width="{}" height="{}" data-x="{}" data-y="{}" data-width="{}" data-height="{}" fill="#1f77b4" fill-opacity="0.15" stroke="#1f77b4"/>"##,
        num(px(win.x)),
        num(py(win.y)),
        num(win.width * sx),
        num(win.height * sy),
        win.x,
        win.y,
        win.width,
        win.height,
    );
    out.push_str("</svg>\n");
    Minimap { svg: out, window: win, extent: ext }
}
