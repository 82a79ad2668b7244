//! Metrics recomputed from the y coordinates alone, ignoring the stored
//! orderings.

use std::collections::BTreeMap;

use storyexp_core::layout::LayoutSpec;

pub struct Naive {
    pub crossings: usize,
    pub wiggles: usize,
    pub whitespace: f64,
}

pub fn scan(spec: &LayoutSpec) -> Naive {
    // step -> line -> y
    let mut grid: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    for line in &spec.lines {
        for seg in &line.segments {
            grid.entry(seg.step).or_default().insert(line.entity_id.0.clone(), seg.y);
        }
    }
    let mut crossings = 0;
    let mut wiggles = 0;
    for s in 0..spec.steps.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (grid.get(&s), grid.get(&(s + 1))) else { continue };
        let both: Vec<&String> = a.keys().filter(|k| b.contains_key(*k)).collect();
        for (i, p) in both.iter().enumerate() {
            if (a[*p] - b[*p]).abs() > 1e-9 {
                wiggles += 1;
            }
            for q in &both[i + 1..] {
                let before = a[*p] < a[*q];
                let after = b[*p] < b[*q];
                if before != after {
                    crossings += 1;
                }
            }
        }
    }
    let ys: Vec<f64> = grid.values().flat_map(|m| m.values().copied()).collect();
    let whitespace = if ys.is_empty() { 0.0 } else { ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64 };
    Naive { crossings, wiggles, whitespace }
}
