//! Multistroke recognizer in the dollar family: every template stroke order
//! and direction is flattened to a unistroke, candidates are resampled,
//! rotated to their indicative angle, scaled and centered, then compared by
//! mean point distance under a golden-section search over rotation.

use serde::{Deserialize, Serialize};

use super::{GestureError, GestureKind, Stroke};

pub const RESAMPLE_POINTS: usize = 96;
pub const SQUARE_SIZE: f64 = 250.0;
pub const ANGLE_RANGE_DEG: f64 = 45.0;
pub const ANGLE_PRECISION_DEG: f64 = 2.0;

/// More strokes than this and only the drawn order (both directions) is used.
const MAX_PERMUTED_STROKES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn dist(self, o: Vec2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecognitionResult {
    pub template_name: GestureKind,
    /// `1 - distance / half-diagonal` of the normalization square, in [0, 1].
    pub score: f64,
    pub distance: f64,
}

fn half_diagonal() -> f64 {
    0.5 * (SQUARE_SIZE * SQUARE_SIZE * 2.0).sqrt()
}

pub fn score_for(distance: f64) -> f64 {
    (1.0 - distance / half_diagonal()).clamp(0.0, 1.0)
}

/// Resamples, rotates to the indicative angle, scales uniformly into the
/// square and centers at the origin. Strokes are joined in drawn order.
pub fn normalize(strokes: &[Stroke]) -> Result<Vec<Vec2>, GestureError> {
    let mut pts: Vec<Vec2> = Vec::new();
    for p in strokes.iter().flat_map(|s| &s.points) {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GestureError::DegenerateInk);
        }
        let v = Vec2::new(p.x, p.y);
        if pts.last() != Some(&v) {
            pts.push(v);
        }
    }
    normalize_points(&pts)
}

pub(crate) fn normalize_points(pts: &[Vec2]) -> Result<Vec<Vec2>, GestureError> {
    if pts.len() < 2 || path_length(pts) <= 1e-9 {
        return Err(GestureError::DegenerateInk);
    }
    let pts = resample(pts, RESAMPLE_POINTS);
    let pts = rotate_by(&pts, -indicative_angle(&pts));
    let pts = scale_to_square(&pts);
    Ok(translate_to_origin(&pts))
}

fn path_length(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Resamples to `n` points with equal straight-line spacing between
/// neighbours, starting at the first point. The spacing is the largest one
/// that still fits `n` points along the path, so for ordinary ink the last
/// point is the end of the stroke; a tail that curls back inside the final
/// circle is dropped. Spacing along the path (the classic scheme) cuts
/// corners differently on a second pass; equal chords make resampling its
/// own fixed point, which keeps normalization idempotent.
fn resample(points: &[Vec2], n: usize) -> Vec<Vec2> {
    // Already equal chords: re-walking would only add rounding, which sharp
    // reversals in noisy ink amplify step by step.
    if points.len() == n {
        let d0 = points[0].dist(points[1]);
        if d0 > 0.0 && points.windows(2).all(|w| (w[0].dist(w[1]) - d0).abs() <= 1e-9 * d0) {
            return points.to_vec();
        }
    }
    let total = path_length(points);
    let (mut lo, mut hi) = (0.0, total / (n - 1) as f64);
    if let Some((out, _)) = chord_walk(points, hi, n) {
        return out;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if chord_walk(points, mid, n).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    chord_walk(points, lo, n).expect("lower bound completes").0
}

/// Walks the path placing each point at distance `d` from the previous one.
/// Returns the points and the path length left over, or `None` when the
/// path ends before all `n` points are placed.
fn chord_walk(pts: &[Vec2], d: f64, n: usize) -> Option<(Vec<Vec2>, f64)> {
    let mut out = Vec::with_capacity(n);
    let mut cur = pts[0];
    out.push(cur);
    // `cur` lies on segment `seg` (from pts[seg] to pts[seg + 1])
    let mut seg = 0;
    while out.len() < n {
        let mut found = None;
        let mut s = seg;
        while s + 1 < pts.len() {
            let a = if s == seg { cur } else { pts[s] };
            let b = pts[s + 1];
            if b.dist(cur) >= d {
                let (ux, uy) = (b.x - a.x, b.y - a.y);
                let (wx, wy) = (a.x - cur.x, a.y - cur.y);
                let uu = ux * ux + uy * uy;
                let wu = wx * ux + wy * uy;
                let ww = wx * wx + wy * wy;
                let t = if uu > 0.0 { ((-wu + (wu * wu - uu * (ww - d * d)).max(0.0).sqrt()) / uu).clamp(0.0, 1.0) } else { 0.0 };
                found = Some((s, Vec2::new(a.x + t * ux, a.y + t * uy)));
                break;
            }
            s += 1;
        }
        let (s, q) = found?;
        seg = s;
        cur = q;
        out.push(cur);
    }
    let left = match pts.get(seg + 1) {
        Some(&next) => cur.dist(next) + path_length(&pts[seg + 1..]),
        None => 0.0,
    };
    Some((out, left))
}

fn centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len() as f64;
    Vec2::new(pts.iter().map(|p| p.x).sum::<f64>() / n, pts.iter().map(|p| p.y).sum::<f64>() / n)
}

fn indicative_angle(pts: &[Vec2]) -> f64 {
    let c = centroid(pts);
    (c.y - pts[0].y).atan2(c.x - pts[0].x)
}

/// Rotates points about their centroid by `radians`.
pub fn rotate_by(pts: &[Vec2], radians: f64) -> Vec<Vec2> {
    let c = centroid(pts);
    let (sin, cos) = radians.sin_cos();
    pts.iter()
        .map(|p| {
            let dx = p.x - c.x;
            let dy = p.y - c.y;
            Vec2::new(dx * cos - dy * sin + c.x, dx * sin + dy * cos + c.y)
        })
        .collect()
}

fn scale_to_square(pts: &[Vec2]) -> Vec<Vec2> {
    let (min_x, max_x) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    let (min_y, max_y) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let extent = (max_x - min_x).max(max_y - min_y);
    let s = SQUARE_SIZE / extent;
    pts.iter().map(|p| Vec2::new(p.x * s, p.y * s)).collect()
}

fn translate_to_origin(pts: &[Vec2]) -> Vec<Vec2> {
    let c = centroid(pts);
    pts.iter().map(|p| Vec2::new(p.x - c.x, p.y - c.y)).collect()
}

/// Mean distance between corresponding points.
pub fn path_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.dist(*q)).sum::<f64>() / a.len().min(b.len()) as f64
}

/// Golden-section search for the rotation of `candidate` (within
/// `±ANGLE_RANGE_DEG`) that best matches `template`.
pub fn distance_at_best_angle(candidate: &[Vec2], template: &[Vec2]) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = -ANGLE_RANGE_DEG.to_radians();
    let mut b = ANGLE_RANGE_DEG.to_radians();
    let threshold = ANGLE_PRECISION_DEG.to_radians();
    let at = |theta: f64| path_distance(&rotate_by(candidate, theta), template);
    let mut x1 = phi * a + (1.0 - phi) * b;
    let mut f1 = at(x1);
    let mut x2 = (1.0 - phi) * a + phi * b;
    let mut f2 = at(x2);
    while (b - a).abs() > threshold {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = phi * a + (1.0 - phi) * b;
            f1 = at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = (1.0 - phi) * a + phi * b;
            f2 = at(x2);
        }
    }
    f1.min(f2)
}

/// A user-accepted gesture kept with the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserTemplate {
    pub kind: GestureKind,
    pub strokes: Vec<Stroke>,
}

#[derive(Debug, Clone)]
pub struct GestureTemplate {
    pub name: GestureKind,
    pub strokes: Vec<Stroke>,
    /// Normalized unistrokes, one per stroke order and direction combination.
    pub unistroke_permutations: Vec<Vec<Vec2>>,
}

impl GestureTemplate {
    pub fn new(name: GestureKind, strokes: Vec<Stroke>) -> Result<Self, GestureError> {
        let raw: Vec<Vec<Vec2>> = strokes
            .iter()
            .map(|s| s.points.iter().map(|p| Vec2::new(p.x, p.y)).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        if raw.is_empty() {
            return Err(GestureError::DegenerateInk);
        }
        let mut unistroke_permutations = Vec::new();
        for joined in stroke_permutations(&raw) {
            unistroke_permutations.push(normalize_points(&joined)?);
        }
        Ok(Self { name, strokes, unistroke_permutations })
    }
}

/// Every ordering of the strokes combined with every choice of direction,
/// each flattened into one point list.
fn stroke_permutations(strokes: &[Vec<Vec2>]) -> Vec<Vec<Vec2>> {
    let n = strokes.len();
    let orders: Vec<Vec<usize>> = if n <= MAX_PERMUTED_STROKES {
        let mut all = Vec::new();
        permute(&mut (0..n).collect(), 0, &mut all);
        all
    } else {
        vec![(0..n).collect()]
    };
    let mut out = Vec::new();
    for order in orders {
        let flips = if n <= MAX_PERMUTED_STROKES { 1usize << n } else { 2 };
        for mask in 0..flips {
            let mut joined = Vec::new();
            for (k, &si) in order.iter().enumerate() {
                let reversed = if n <= MAX_PERMUTED_STROKES { mask >> k & 1 == 1 } else { mask == 1 };
                if reversed {
                    joined.extend(strokes[si].iter().rev());
                } else {
                    joined.extend(strokes[si].iter());
                }
            }
            joined.dedup();
            out.push(joined);
        }
    }
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Ordered template registry: built-ins first, then user templates.
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: Vec<GestureTemplate>,
}

impl TemplateSet {
    pub const USER_CAP_PER_CLASS: usize = 8;

    pub fn empty() -> Self {
        Self::default()
    }

    /// One prototype per gesture class.
    pub fn builtin() -> Self {
        let mut set = Self::empty();
        for kind in GestureKind::ALL {
            set.templates
                .push(GestureTemplate::new(kind, prototype_ink(kind)).expect("built-in prototypes are valid"));
        }
        set
    }

    pub fn push(&mut self, template: GestureTemplate) {
        self.templates.push(template);
    }

    /// Adds a user template; degenerate ink is ignored.
    pub fn push_user(&mut self, t: UserTemplate) {
        if let Ok(tpl) = GestureTemplate::new(t.kind, t.strokes) {
            self.templates.push(tpl);
        }
    }

    pub fn templates(&self) -> &[GestureTemplate] {
        &self.templates
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

/// Raw prototype ink for a gesture class, in page pixels.
pub fn prototype_ink(kind: GestureKind) -> Vec<Stroke> {
    match kind {
        GestureKind::Underline => {
            vec![Stroke::from_xy(&(0..=30).map(|i| (i as f64 * 10.0, 0.0)).collect::<Vec<_>>())]
        }
        GestureKind::HighlightBox => {
            let (w, h): (f64, f64) = (300.0, 60.0);
            let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h), (0.0, 0.0)];
            let mut pts = Vec::new();
            for c in corners.windows(2) {
                let ((x0, y0), (x1, y1)) = (c[0], c[1]);
                let steps = (f64::hypot(x1 - x0, y1 - y0) / 10.0).ceil() as usize;
                for s in 0..steps {
                    let t = s as f64 / steps as f64;
                    pts.push((x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
                }
            }
            pts.push((0.0, 0.0));
            vec![Stroke::from_xy(&pts)]
        }
        GestureKind::StrikeDelete => {
            let a: Vec<_> = (0..=12).map(|i| (i as f64 * 10.0, i as f64 * 10.0)).collect();
            let b: Vec<_> = (0..=12).map(|i| (120.0 - i as f64 * 10.0, i as f64 * 10.0)).collect();
            vec![Stroke::from_xy(&a), Stroke::from_xy(&b)]
        }
        GestureKind::CircleModify => {
            let pts: Vec<_> = (0..=64)
                .map(|i| {
                    let a = std::f64::consts::PI + i as f64 / 64.0 * std::f64::consts::TAU;
                    (150.0 + 150.0 * a.cos(), 40.0 + 40.0 * a.sin())
                })
                .collect();
            vec![Stroke::from_xy(&pts)]
        }
    }
}

/// Best-matching template. Ties go to the earlier-registered template.
pub fn recognize(strokes: &[Stroke], templates: &TemplateSet) -> Result<RecognitionResult, GestureError> {
    if templates.is_empty() {
        return Err(GestureError::NoTemplates);
    }
    let candidate = normalize(strokes)?;
    let mut best: Option<(GestureKind, f64)> = None;
    for t in templates.templates() {
        for perm in &t.unistroke_permutations {
            let d = distance_at_best_angle(&candidate, perm);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((t.name, d));
            }
        }
    }
    let (template_name, distance) = best.expect("non-empty template set");
    Ok(RecognitionResult { template_name, score: score_for(distance), distance })
}
