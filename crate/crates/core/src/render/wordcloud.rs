use serde::{Deserialize, Serialize};

use super::FontMetrics;
use crate::extract::WeightedTerm;

pub const SPIRAL_STEPS: usize = 2000;
/// Angle advanced per spiral step, in radians.
const SPIRAL_DTHETA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn contains(&self, b: &[f64; 4]) -> bool {
        b[0] >= self.x && b[1] >= self.y && b[2] <= self.x + self.width && b[3] <= self.y + self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    #[serde(rename = "0")]
    Horizontal,
    #[serde(rename = "90")]
    Vertical,
}

impl Rotation {
    pub fn degrees(self) -> u32 {
        match self {
            Self::Horizontal => 0,
            Self::Vertical => 90,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WordCloudPlacement {
    pub term: String,
    /// Center of the box.
    pub x: f64,
    pub y: f64,
    pub font_size: f64,
    pub rotation: Rotation,
    pub width: f64,
    pub height: f64,
}

impl WordCloudPlacement {
    /// Axis-aligned box as `[x0, y0, x1, y1]`.
    pub fn bbox(&self) -> [f64; 4] {
        [self.x - self.width / 2.0, self.y - self.height / 2.0, self.x + self.width / 2.0, self.y + self.height / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CloudLayout {
    pub placed: Vec<WordCloudPlacement>,
    /// Terms with no collision-free position, heaviest first.
    pub skipped: Vec<String>,
}

fn overlaps(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}

/// Greedy spiral placement. Terms go heaviest first (ties alphabetical),
/// each trying the positions of an Archimedean spiral out from the region
/// center, horizontal before vertical, until its box fits inside the region
/// without overlapping an earlier box. Font size is linear in weight.
pub fn layout_wordcloud(terms: &[WeightedTerm], region: Region, font: &FontMetrics) -> CloudLayout {
    let mut order: Vec<&WeightedTerm> = terms.iter().filter(|t| !t.term.is_empty() && t.weight > 0.0).collect();
    order.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    let mut out = CloudLayout::default();
    if order.is_empty() || region.width <= 0.0 || region.height <= 0.0 {
        out.skipped = order.iter().map(|t| t.term.clone()).collect();
        return out;
    }
    let wmax = order[0].weight;
    let wmin = order[order.len() - 1].weight;
    let size_of = |w: f64| {
        if wmax > wmin {
            font.cloud_min_size + (w - wmin) / (wmax - wmin) * (font.cloud_max_size - font.cloud_min_size)
        } else {
            font.cloud_max_size
        }
    };
    let cx = region.x + region.width / 2.0;
    let cy = region.y + region.height / 2.0;
    let r_max = region.width.hypot(region.height) / 2.0;
    let b = r_max / (SPIRAL_STEPS as f64 * SPIRAL_DTHETA);
    let mut boxes: Vec<[f64; 4]> = Vec::new();

    for t in order {
        let size = size_of(t.weight);
        let w = font.text_width(&t.term, size);
        let h = size;
        let mut placed = None;
        'spiral: for i in 0..SPIRAL_STEPS {
            let theta = i as f64 * SPIRAL_DTHETA;
            let r = b * theta;
            let (x, y) = (cx + r * theta.cos(), cy + r * theta.sin());
            for rot in [Rotation::Horizontal, Rotation::Vertical] {
                let (bw, bh) = if rot == Rotation::Horizontal { (w, h) } else { (h, w) };
                let bx = [x - bw / 2.0, y - bh / 2.0, x + bw / 2.0, y + bh / 2.0];
                if region.contains(&bx) && !boxes.iter().any(|o| overlaps(o, &bx)) {
                    placed = Some(WordCloudPlacement { term: t.term.clone(), x, y, font_size: size, rotation: rot, width: bw, height: bh });
                    break 'spiral;
                }
            }
        }
        match placed {
            Some(p) => {
                boxes.push(p.bbox());
                out.placed.push(p);
            }
            None => out.skipped.push(t.term.clone()),
        }
    }
    out
}
