use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use storyexp_core::gesture::{
    normalize, path_distance, prototype_ink, rotate_by, GestureKind, Point, Stroke, TemplateSet,
};

pub fn bbox_diagonal(strokes: &[Stroke]) -> f64 {
    let pts: Vec<&Point> = strokes.iter().flat_map(|s| &s.points).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0).hypot(y1 - y0)
}

/// Applies `(x, y) -> f(x, y)` to every point.
pub fn map_ink(strokes: &[Stroke], mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Vec<Stroke> {
    strokes
        .iter()
        .map(|s| {
            Stroke::new(
                s.points
                    .iter()
                    .map(|p| {
                        let (x, y) = f(p.x, p.y);
                        Point { x, y, t: p.t }
                    })
                    .collect(),
            )
        })
        .collect()
}

/// The prototype ink of `kind` placed at a random position and size, with
/// Gaussian noise of `sigma_frac` times the bounding-box diagonal added to
/// every point independently.
pub fn noisy_instance(kind: GestureKind, seed: u64, sigma_frac: f64) -> Vec<Stroke> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = rng.random_range(0.5..2.0);
    let (dx, dy) = (rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
    let placed = map_ink(&prototype_ink(kind), |x, y| (x * scale + dx, y * scale + dy));
    let noise = Normal::new(0.0, sigma_frac * bbox_diagonal(&placed)).unwrap();
    map_ink(&placed, |x, y| (x + noise.sample(&mut rng), y + noise.sample(&mut rng)))
}

/// Best template by exhaustive rotation at one-degree steps over ±45°.
pub fn brute_force(strokes: &[Stroke], templates: &TemplateSet) -> (GestureKind, f64) {
    let c = normalize(strokes).unwrap();
    let rotations: Vec<_> = (-45..=45).map(|d| rotate_by(&c, (d as f64).to_radians())).collect();
    let mut best = (GestureKind::Underline, f64::INFINITY);
    for t in templates.templates() {
        for perm in &t.unistroke_permutations {
            for r in &rotations {
                let d = path_distance(r, perm);
                if d < best.1 {
                    best = (t.name, d);
                }
            }
        }
    }
    best
}
