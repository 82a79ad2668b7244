use std::collections::BTreeMap;
use std::ops::Range;

use super::{ExtractError, ExtractionConfig, LevelWeights, WeightedTerm};
use crate::text;

/// Weighted terms for a word cloud, truncated to `config.max_keywords`.
pub fn keyword_weights(
    input: &str,
    highlights: &[Range<usize>],
    entity_names: &[String],
    config: &ExtractionConfig,
) -> Result<Vec<WeightedTerm>, ExtractError> {
    let mut all = keyword_weights_all(input, highlights, entity_names, &config.level_weights)?;
    all.truncate(config.max_keywords);
    Ok(all)
}

/// Every term with its weight. Each occurrence contributes the multiplier of
/// the highest level it sits in (entity over highlight over body), so nested
/// annotations are never counted twice. Sorted by weight descending, ties
/// lexicographic.
pub fn keyword_weights_all(
    input: &str,
    highlights: &[Range<usize>],
    entity_names: &[String],
    weights: &LevelWeights,
) -> Result<Vec<WeightedTerm>, ExtractError> {
    if input.trim().is_empty() {
        return Err(ExtractError::EmptyText);
    }
    let chars: Vec<char> = input.chars().collect();
    let entity_ranges: Vec<Range<usize>> = entity_names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .flat_map(|n| text::find_word_bounded(&chars, n.trim()))
        .collect();
    let inside = |ranges: &[Range<usize>], t: &text::Token| ranges.iter().any(|r| r.start <= t.start && t.end <= r.end);

    let mut acc: BTreeMap<String, f64> = BTreeMap::new();
    for tok in text::tokenize(input) {
        if text::is_stop_word(&tok.text) {
            continue;
        }
        let m = if inside(&entity_ranges, &tok) {
            weights.entity
        } else if inside(highlights, &tok) {
            weights.highlight
        } else {
            weights.body
        };
        *acc.entry(tok.text.to_lowercase()).or_default() += m;
    }
    let mut out: Vec<WeightedTerm> = acc.into_iter().map(|(term, weight)| WeightedTerm { term, weight }).collect();
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    Ok(out)
}
