//! Entity extraction, summarization and keyword weighting.
//!
//! Everything that would normally ask a language model goes through the
//! [`Provider`] trait. [`RuleProvider`] is a deterministic offline provider;
//! [`RemoteProvider`] speaks the JSON wire protocol of an external service.
//! Trust filtering and the refinement loop live here, outside any provider,
//! so they behave the same whichever provider is configured.

mod keywords;
mod prompt;
mod remote;
mod rule;
mod summarize;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Entity, EntityKind, TextSpan};
use crate::text;

pub use keywords::{keyword_weights, keyword_weights_all};
pub use prompt::{build_prompt, PromptPlan, KNOWLEDGE_BALANCE_MIN, RELY_ON_MODEL_KNOWLEDGE, ROLE_PREAMBLE};
pub use remote::{RemoteProvider, DEFAULT_MAX_IN_FLIGHT};
pub use rule::{Gazetteer, RuleProvider};
pub use summarize::{extractive_summary, score_sentences};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ProviderKind {
    Rule,
    #[serde(rename = "remoteLM")]
    RemoteLm,
}

/// Multipliers for the three annotation levels a word can sit in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LevelWeights {
    pub body: f64,
    pub highlight: f64,
    pub entity: f64,
}

impl Default for LevelWeights {
    fn default() -> Self {
        Self { body: 1.0, highlight: 2.0, entity: 4.0 }
    }
}

/// Confidence the rule provider assigns per kind of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RuleConfidence {
    pub gazetteer: f64,
    pub pattern: f64,
    pub user_marked: f64,
}

impl Default for RuleConfidence {
    fn default() -> Self {
        Self { gazetteer: 0.9, pattern: 0.7, user_marked: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ExtractionConfig {
    /// Candidates below this confidence are dropped.
    pub trust_threshold: f64,
    pub max_iterations: u32,
    pub provider_kind: ProviderKind,
    /// Sentence budget for summaries.
    pub summary_sentences: usize,
    pub level_weights: LevelWeights,
    pub rule_confidence: RuleConfidence,
    pub max_keywords: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            trust_threshold: 0.5,
            max_iterations: 3,
            provider_kind: ProviderKind::Rule,
            summary_sentences: 2,
            level_weights: LevelWeights::default(),
            rule_confidence: RuleConfidence::default(),
            max_keywords: 30,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        let bad = |m: &str| Err(ExtractError::InvalidConfig(m.to_owned()));
        if !(0.0..=1.0).contains(&self.trust_threshold) {
            return bad("trustThreshold must lie in [0, 1]");
        }
        if self.max_iterations == 0 {
            return bad("maxIterations must be at least 1");
        }
        if self.summary_sentences == 0 {
            return bad("summarySentences must be at least 1");
        }
        let w = self.level_weights;
        if !(w.body > 0.0 && w.highlight > 0.0 && w.entity > 0.0) {
            return bad("level weights must be positive");
        }
        let c = self.rule_confidence;
        if ![c.gazetteer, c.pattern, c.user_marked].iter().all(|v| (0.0..=1.0).contains(v)) {
            return bad("rule confidences must lie in [0, 1]");
        }
        Ok(())
    }
}

/// An entity proposed by a provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateEntity {
    pub surface: String,
    pub kind: EntityKind,
    pub confidence: f64,
    /// Where the surface occurs in the extraction text (page 0 = that text).
    /// Absent only for reader-marked entities that were not seen in the text.
    #[serde(default)]
    pub source_span: Option<TextSpan>,
}

/// An entity the reader has confirmed, as handed to providers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KnownEntity {
    pub name: String,
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl KnownEntity {
    pub fn new(name: impl Into<String>, kind: EntityKind) -> Self {
        Self { name: name.into(), kind, aliases: Vec::new() }
    }

    pub fn answers_to(&self, surface: &str) -> bool {
        let f = text::fold(surface);
        text::fold(&self.name) == f || self.aliases.iter().any(|a| text::fold(a) == f)
    }
}

impl From<&Entity> for KnownEntity {
    fn from(e: &Entity) -> Self {
        Self { name: e.canonical_name.clone(), kind: e.kind, aliases: e.aliases.iter().cloned().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
}

/// Input to a summarizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRequest<'a> {
    pub text: &'a str,
    /// Highlighted code-point ranges of `text`.
    pub highlights: &'a [Range<usize>],
    pub entity_names: &'a [String],
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("text is empty")]
    EmptyText,
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("invalid extraction config: {0}")]
    InvalidConfig(String),
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
}

impl ExtractError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EmptyText => "EmptyText",
            Self::ProviderUnavailable(_) => "ProviderUnavailable",
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::Gazetteer { .. } => "GazetteerError",
        }
    }
}

pub trait Provider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    /// Raw candidates for `text`; filtering is the caller's job.
    fn extract(&self, plan: &PromptPlan, text: &str) -> Result<Vec<CandidateEntity>, ExtractError>;

    /// One refinement round over `current`, guided by the plan's known
    /// entities.
    fn refine(&self, plan: &PromptPlan, current: &[CandidateEntity]) -> Result<Vec<CandidateEntity>, ExtractError>;

    fn summarize(&self, plan: &PromptPlan, request: &SummaryRequest<'_>) -> Result<String, ExtractError>;
}

/// Canonical candidate order: by position, then kind, then surface.
pub(crate) fn sort_candidates(cands: &mut [CandidateEntity]) {
    cands.sort_by(|a, b| {
        let pa = a.source_span.map_or(usize::MAX, |s| s.start);
        let pb = b.source_span.map_or(usize::MAX, |s| s.start);
        pa.cmp(&pb)
            .then(a.kind.cmp(&b.kind))
            .then_with(|| text::fold(&a.surface).cmp(&text::fold(&b.surface)))
            .then_with(|| b.confidence.partial_cmp(&a.confidence).unwrap_or(Ordering::Equal))
    });
}

/// Keeps one candidate per (kind, surface): the earliest occurrence, with the
/// highest confidence seen.
pub(crate) fn dedup_candidates(cands: Vec<CandidateEntity>) -> Vec<CandidateEntity> {
    let mut index: HashMap<(EntityKind, String), usize> = HashMap::new();
    let mut out: Vec<CandidateEntity> = Vec::new();
    for c in cands {
        let key = (c.kind, text::fold(&c.surface));
        match index.get(&key) {
            Some(&i) => {
                let kept = &mut out[i];
                kept.confidence = kept.confidence.max(c.confidence);
                let earlier = match (kept.source_span, c.source_span) {
                    (None, Some(_)) => true,
                    (Some(k), Some(n)) => n.start < k.start,
                    _ => false,
                };
                if earlier {
                    kept.source_span = c.source_span;
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(c);
            }
        }
    }
    sort_candidates(&mut out);
    out
}

/// Extracts typed entities from `text`, keeping candidates at or above the
/// trust threshold.
pub fn extract_entities(
    text_in: &str,
    known: &[KnownEntity],
    config: &ExtractionConfig,
    provider: &dyn Provider,
) -> Result<Vec<CandidateEntity>, ExtractError> {
    config.validate()?;
    if text_in.trim().is_empty() {
        return Err(ExtractError::EmptyText);
    }
    let plan = build_prompt(known, config);
    let len = text::char_len(text_in);
    let raw = provider.extract(&plan, text_in)?;
    let kept = raw
        .into_iter()
        .filter(|c| c.confidence >= config.trust_threshold && c.confidence <= 1.0)
        .filter(|c| !c.surface.trim().is_empty())
        .filter(|c| c.source_span.is_some_and(|s| s.start < s.end && s.end <= len))
        .collect();
    Ok(dedup_candidates(kept))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RefineOutcome {
    pub entities: Vec<CandidateEntity>,
    pub rounds: u32,
}

/// Iterative refinement: each round lets the provider resolve ambiguous
/// names against the reader's marks, stopping once a round changes nothing
/// or after `max_iterations` rounds. Reader-marked entities are always in the
/// output with confidence 1.0.
pub fn refine_entities(
    previous: &[CandidateEntity],
    user_marked: &[KnownEntity],
    config: &ExtractionConfig,
    provider: &dyn Provider,
) -> Result<RefineOutcome, ExtractError> {
    config.validate()?;
    let plan = build_prompt(user_marked, config);
    let mut current = previous.to_vec();
    for round in 1..=config.max_iterations {
        let next = enforce_marks(provider.refine(&plan, &current)?, user_marked, config);
        if next == current {
            return Ok(RefineOutcome { entities: next, rounds: round });
        }
        current = next;
    }
    Ok(RefineOutcome { entities: current, rounds: config.max_iterations })
}

fn enforce_marks(
    cands: Vec<CandidateEntity>,
    user_marked: &[KnownEntity],
    config: &ExtractionConfig,
) -> Vec<CandidateEntity> {
    let is_marked = |c: &CandidateEntity| user_marked.iter().any(|k| k.kind == c.kind && text::fold(&k.name) == text::fold(&c.surface));
    let mut out: Vec<CandidateEntity> = cands
        .into_iter()
        .map(|mut c| {
            if is_marked(&c) {
                c.confidence = 1.0;
            }
            c
        })
        .filter(|c| c.confidence >= config.trust_threshold)
        .collect();
    for k in user_marked {
        if !out.iter().any(|c| c.kind == k.kind && text::fold(&c.surface) == text::fold(&k.name)) {
            out.push(CandidateEntity { surface: k.name.clone(), kind: k.kind, confidence: 1.0, source_span: None });
        }
    }
    dedup_candidates(out)
}

/// Summary of `text` within the configured sentence budget.
pub fn summarize(
    text_in: &str,
    highlights: &[Range<usize>],
    entity_names: &[String],
    config: &ExtractionConfig,
    provider: &dyn Provider,
) -> Result<String, ExtractError> {
    config.validate()?;
    if text_in.trim().is_empty() {
        return Err(ExtractError::EmptyText);
    }
    let plan = build_prompt(&[], config);
    let request = SummaryRequest { text: text_in, highlights, entity_names, budget: config.summary_sentences };
    provider.summarize(&plan, &request)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> RuleProvider {
        RuleProvider::default()
    }

    #[test]
    fn rule_provider_finds_honorific_person_and_place() {
        let cfg = ExtractionConfig::default();
        let out = extract_entities("Professor Dumbledore arrived at Privet Drive.", &[], &cfg, &rule()).unwrap();
        let has = |kind, s: &str| out.iter().any(|c| c.kind == kind && c.surface == s);
        assert!(has(EntityKind::Person, "Professor Dumbledore"), "{out:?}");
        assert!(has(EntityKind::Place, "Privet Drive"), "{out:?}");
        let place = out.iter().find(|c| c.surface == "Privet Drive").unwrap();
        assert_eq!(place.confidence, 0.9);
        assert_eq!(place.source_span, Some(TextSpan::new(0, 32, 44)));
    }

    #[test]
    fn full_trust_keeps_only_known_entities() {
        let cfg = ExtractionConfig { trust_threshold: 1.0, ..Default::default() };
        let known = [KnownEntity::new("Harry", EntityKind::Person)];
        let out = extract_entities("Professor Dumbledore left Harry at Privet Drive.", &known, &cfg, &rule()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].surface, "Harry");
        assert_eq!(out[0].confidence, 1.0);
    }

    #[test]
    fn empty_text_is_rejected() {
        let cfg = ExtractionConfig::default();
        assert_eq!(extract_entities("  ", &[], &cfg, &rule()), Err(ExtractError::EmptyText));
        assert_eq!(summarize("", &[], &[], &cfg, &rule()), Err(ExtractError::EmptyText));
    }

    #[test]
    fn refine_unifies_alias_to_marked_name() {
        let cfg = ExtractionConfig::default();
        let previous = vec![CandidateEntity {
            surface: "the soldier".into(),
            kind: EntityKind::Person,
            confidence: 0.7,
            source_span: Some(TextSpan::new(0, 4, 15)),
        }];
        let marked = [KnownEntity::new("soldier", EntityKind::Person)];
        let out = refine_entities(&previous, &marked, &cfg, &rule()).unwrap();
        assert_eq!(
            out.entities,
            vec![CandidateEntity {
                surface: "soldier".into(),
                kind: EntityKind::Person,
                confidence: 1.0,
                source_span: Some(TextSpan::new(0, 4, 15)),
            }]
        );
    }

    #[test]
    fn refine_of_fixed_point_takes_one_round() {
        let cfg = ExtractionConfig::default();
        let marked = [KnownEntity::new("soldier", EntityKind::Person)];
        let first = refine_entities(&[], &marked, &cfg, &rule()).unwrap();
        let again = refine_entities(&first.entities, &marked, &cfg, &rule()).unwrap();
        assert_eq!(again.rounds, 1);
        assert_eq!(again.entities, first.entities);
    }

    #[test]
    fn zero_iterations_is_invalid() {
        let cfg = ExtractionConfig { max_iterations: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ExtractError::InvalidConfig(_))));
        assert!(refine_entities(&[], &[], &cfg, &rule()).is_err());
    }
}
