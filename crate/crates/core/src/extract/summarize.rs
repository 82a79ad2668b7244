use std::ops::Range;

use super::SummaryRequest;
use crate::text;

pub const ENTITY_MENTION_WEIGHT: f64 = 3.0;
pub const HIGHLIGHT_WEIGHT: f64 = 2.0;

/// Per-sentence scores: entity mentions x3, overlapping highlights x2, plus
/// the position prior 1/(i+1).
pub fn score_sentences(input: &str, highlights: &[Range<usize>], entity_names: &[String]) -> Vec<(Range<usize>, f64)> {
    let chars: Vec<char> = input.chars().collect();
    text::sentences(input)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let sentence = &chars[s.clone()];
            let mentions: usize = entity_names
                .iter()
                .filter(|n| !n.trim().is_empty())
                .map(|n| text::find_word_bounded(sentence, n.trim()).len())
                .sum();
            let overlaps = highlights.iter().filter(|h| h.start < s.end && s.start < h.end).count();
            let score = ENTITY_MENTION_WEIGHT * mentions as f64 + HIGHLIGHT_WEIGHT * overlaps as f64 + 1.0 / (i as f64 + 1.0);
            (s, score)
        })
        .collect()
}

/// The `budget` best sentences, joined in document order.
pub fn extractive_summary(request: &SummaryRequest<'_>) -> String {
    let scored = score_sentences(request.text, request.highlights, request.entity_names);
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1).then(a.cmp(&b)));
    order.truncate(request.budget);
    order.sort_unstable();
    order
        .iter()
        .map(|&i| text::slice_chars(request.text, scored[i].0.start, scored[i].0.end))
        .collect::<Vec<_>>()
        .join(" ")
}
