use super::{LayoutSpec, Metrics};
use crate::model::EntityId;

const WIGGLE_EPS: f64 = 1e-9;

/// Quality measures of a finished layout.
///
/// * crossings: line pairs whose relative order flips between adjacent steps
/// * wiggles: (line, step) pairs with a vertical move to the next step
/// * whitespace: Σy² over all line-steps, divided by their count
pub fn metrics(spec: &LayoutSpec) -> Metrics {
    let mut crossings = 0;
    for w in spec.steps.windows(2) {
        let (a, b) = (&w[0].ordering, &w[1].ordering);
        let common: Vec<(&EntityId, usize)> =
            a.iter().filter_map(|id| b.iter().position(|x| x == id).map(|p| (id, p))).collect();
        for i in 0..common.len() {
            for j in i + 1..common.len() {
                if common[i].1 > common[j].1 {
                    crossings += 1;
                }
            }
        }
    }
    let mut wiggles = 0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for line in &spec.lines {
        for (i, seg) in line.segments.iter().enumerate() {
            sum_sq += seg.y * seg.y;
            count += 1;
            if let Some(next) = line.segments.get(i + 1) {
                if next.step == seg.step + 1 && (next.y - seg.y).abs() > WIGGLE_EPS {
                    wiggles += 1;
                }
            }
        }
    }
    let whitespace = if count == 0 { 0.0 } else { sum_sq / count as f64 };
    Metrics { crossings, wiggles, whitespace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{LayoutFlags, LineSpec, Segment, SessionSpec, StepSpec};

    fn step(i: usize, order: &[&str]) -> StepSpec {
        StepSpec {
            index: i,
            source_steps: vec![i],
            sessions: order.iter().map(|m| SessionSpec { fragment_id: format!("f{i}{m}").as_str().into(), members: vec![(*m).into()] }).collect(),
            ordering: order.iter().map(|m| (*m).into()).collect(),
        }
    }

    fn line(id: &str, ys: &[(usize, f64)]) -> LineSpec {
        LineSpec { entity_id: id.into(), segments: ys.iter().map(|&(step, y)| Segment { step, y }).collect() }
    }

    fn spec(steps: Vec<StepSpec>, lines: Vec<LineSpec>) -> LayoutSpec {
        LayoutSpec {
            steps,
            lines,
            blocks: vec![],
            anchors: vec![],
            metrics: Metrics { crossings: 0, wiggles: 0, whitespace: 0.0 },
            flags: LayoutFlags::default(),
        }
    }

    #[test]
    fn one_swap_is_one_crossing() {
        let s = spec(
            vec![step(0, &["a", "b"]), step(1, &["b", "a"])],
            vec![line("a", &[(0, -1.5), (1, 1.5)]), line("b", &[(0, 1.5), (1, -1.5)])],
        );
        let m = metrics(&s);
        assert_eq!(m.crossings, 1);
        assert_eq!(m.wiggles, 2);
        assert!((m.whitespace - 2.25).abs() < 1e-12);
    }

    #[test]
    fn straight_lines_do_not_wiggle() {
        let s = spec(vec![step(0, &["a"]), step(1, &["a"])], vec![line("a", &[(0, 2.0), (1, 2.0)])]);
        assert_eq!(metrics(&s).wiggles, 0);
    }

    #[test]
    fn gaps_in_a_line_are_not_wiggles() {
        let s = spec(
            vec![step(0, &["a"]), step(1, &["b"]), step(2, &["a"])],
            vec![line("a", &[(0, 0.0), (2, 5.0)]), line("b", &[(1, 0.0)])],
        );
        assert_eq!(metrics(&s).wiggles, 0);
    }
}
