use std::collections::HashMap;
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use super::{
    dedup_candidates, extractive_summary, CandidateEntity, ExtractError, PromptPlan, Provider, ProviderKind,
    RuleConfidence, SummaryRequest,
};
use crate::model::{EntityKind, TextSpan};
use crate::text;

const BUILTIN_GAZETTEER: &str = include_str!("gazetteer.tsv");

/// Known surface forms with their kinds, matched case-insensitively on word
/// boundaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: Vec<(EntityKind, String)>,
}

impl Gazetteer {
    /// Parses `kind<TAB>surface` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(source: &str) -> Result<Self, ExtractError> {
        let mut g = Self::default();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: &str| ExtractError::Gazetteer { line: i + 1, message: message.to_owned() };
            let (kind, surface) = line.split_once('\t').ok_or_else(|| err("expected kind<TAB>surface"))?;
            let kind = EntityKind::parse(kind.trim()).ok_or_else(|| err("unknown entity kind"))?;
            let surface = surface.trim();
            if surface.is_empty() {
                return Err(err("empty surface"));
            }
            g.insert(kind, surface);
        }
        Ok(g)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_GAZETTEER).expect("builtin gazetteer parses")
    }

    pub fn insert(&mut self, kind: EntityKind, surface: &str) {
        let f = text::fold(surface);
        if !self.entries.iter().any(|(k, s)| *k == kind && text::fold(s) == f) {
            self.entries.push((kind, surface.to_owned()));
        }
    }

    pub fn extend(&mut self, other: &Gazetteer) {
        for (k, s) in &other.entries {
            self.insert(*k, s);
        }
    }

    pub fn entries(&self) -> &[(EntityKind, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Deterministic offline provider built from a gazetteer and a handful of
/// surface patterns. Precedence when hits overlap: known entities, then
/// gazetteer, honorifics, time expressions, place cues and finally bare
/// capitalized runs.
#[derive(Debug, Clone)]
pub struct RuleProvider {
    pub gazetteer: Gazetteer,
    pub confidence: RuleConfidence,
}

impl Default for RuleProvider {
    fn default() -> Self {
        Self { gazetteer: Gazetteer::builtin(), confidence: RuleConfidence::default() }
    }
}

const HONORIFICS: &str = "Mr|Mrs|Ms|Miss|Dr|Prof|Professor|Sir|Dame|Madam|Madame|Lady|Lord|King|Queen|Prince|Princess|Uncle|Aunt|Captain|Master|Mistress";

static HONORIFIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"\b(?:{HONORIFICS})\.?(?:[ \t]+\p{{Lu}}[\p{{L}}'’-]*)+")).unwrap()
});

static PLACE_CUE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:at|in|into|to|from|near|towards?|through)[ \t]+(?:the[ \t]+)?(\p{Lu}[\p{L}'’-]*(?:[ \t]+\p{Lu}[\p{L}'’-]*)*)").unwrap()
});

static TIME: LazyLock<Regex> = LazyLock::new(|| {
    let month = "January|February|March|April|May|June|July|August|September|October|November|December";
    let day = "Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday";
    let part = "morning|afternoon|evening|night|day|week|month|year|spring|summer|autumn|winter";
    Regex::new(&format!(
        r"(?i:\b(?:\d{{1,2}}(?:st|nd|rd|th)?[ \t]+(?:{month})(?:,?[ \t]+\d{{4}})?|(?:{month})[ \t]+\d{{1,2}}(?:st|nd|rd|th)?(?:,?[ \t]+\d{{4}})?|(?:(?:on|last|next)[ \t]+)?(?:{day})|(?:that|this|one|next|last|every|the[ \t]+next|the[ \t]+following|the[ \t]+same)[ \t]+(?:{part})|midnight|noon|dawn|dusk|daybreak|nightfall|yesterday|today|tomorrow|\d{{1,2}}[ \t]+o'clock|\d{{1,2}}(?::\d{{2}})?[ \t]*[ap]\.m\.|(?:in[ \t]+)?(?:1[5-9]|20)\d{{2}})\b)"
    ))
    .unwrap()
});

const DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "old", "young", "little", "poor"];

/// Precedence ranks; lower wins when hits overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Rank {
    Known,
    Gazetteer,
    Honorific,
    Time,
    PlaceCue,
    CapitalRun,
}

#[derive(Debug, Clone)]
struct Hit {
    range: Range<usize>,
    kind: EntityKind,
    surface: String,
    confidence: f64,
    rank: Rank,
}

impl RuleProvider {
    pub fn new(gazetteer: Gazetteer, confidence: RuleConfidence) -> Self {
        Self { gazetteer, confidence }
    }

    fn hits(&self, plan: &PromptPlan, input: &str) -> Vec<Hit> {
        let chars: Vec<char> = input.chars().collect();
        let to_char = byte_to_char_map(input);
        let slice = |r: &Range<usize>| chars[r.clone()].iter().collect::<String>();
        let mut hits = Vec::new();

        for k in &plan.known_entities {
            for name in std::iter::once(&k.name).chain(&k.aliases) {
                for r in text::find_word_bounded(&chars, name) {
                    hits.push(Hit {
                        range: r,
                        kind: k.kind,
                        surface: k.name.clone(),
                        confidence: self.confidence.user_marked,
                        rank: Rank::Known,
                    });
                }
            }
        }
        for (kind, surface) in self.gazetteer.entries() {
            for r in text::find_word_bounded(&chars, surface) {
                hits.push(Hit {
                    surface: slice(&r),
                    range: r,
                    kind: *kind,
                    confidence: self.confidence.gazetteer,
                    rank: Rank::Gazetteer,
                });
            }
        }
        for m in HONORIFIC.find_iter(input) {
            let r = to_char[m.start()]..to_char[m.end()];
            hits.push(self.pattern_hit(r.clone(), EntityKind::Person, slice(&r), Rank::Honorific));
        }
        for m in TIME.find_iter(input) {
            let r = to_char[m.start()]..to_char[m.end()];
            hits.push(self.pattern_hit(r.clone(), EntityKind::Time, slice(&r), Rank::Time));
        }

        // capitalized runs and cue-marked places compete per surface: the
        // more frequent reading wins, ties going to the place cue
        let runs = capitalized_runs(&chars);
        let mut cue_hits: Vec<Range<usize>> = Vec::new();
        for c in PLACE_CUE.captures_iter(input) {
            let g = c.get(1).unwrap();
            let r = to_char[g.start()]..to_char[g.end()];
            if !is_possessive(&chars, r.end) {
                cue_hits.push(r);
            }
        }
        let mut cue_count: HashMap<String, usize> = HashMap::new();
        for r in &cue_hits {
            *cue_count.entry(text::fold(&slice(r))).or_default() += 1;
        }
        let mut run_count: HashMap<String, usize> = HashMap::new();
        let mut mid_sentence: HashMap<String, bool> = HashMap::new();
        for run in &runs {
            let key = text::fold(&slice(&run.range));
            if !cue_hits.iter().any(|c| c.start == run.range.start) {
                *run_count.entry(key.clone()).or_default() += 1;
            }
            *mid_sentence.entry(key).or_default() |= !run.sentence_initial;
        }
        for r in cue_hits {
            let key = text::fold(&slice(&r));
            if cue_count[&key] >= run_count.get(&key).copied().unwrap_or(0) {
                hits.push(self.pattern_hit(r.clone(), EntityKind::Place, slice(&r), Rank::PlaceCue));
            }
        }
        for run in runs {
            let key = text::fold(&slice(&run.range));
            let cues = cue_count.get(&key).copied().unwrap_or(0);
            if mid_sentence[&key] && cues < run_count.get(&key).copied().unwrap_or(0) {
                hits.push(self.pattern_hit(run.range.clone(), EntityKind::Person, slice(&run.range), Rank::CapitalRun));
            }
        }
        hits
    }

    fn pattern_hit(&self, range: Range<usize>, kind: EntityKind, surface: String, rank: Rank) -> Hit {
        Hit { range, kind, surface, confidence: self.confidence.pattern, rank }
    }
}

/// Greedy acceptance in precedence order, longer hits first within a rank.
fn accept(mut hits: Vec<Hit>) -> Vec<Hit> {
    hits.sort_by(|a, b| {
        a.rank
            .cmp(&b.rank)
            .then((b.range.end - b.range.start).cmp(&(a.range.end - a.range.start)))
            .then(a.range.start.cmp(&b.range.start))
    });
    let mut taken: Vec<Range<usize>> = Vec::new();
    let mut out = Vec::new();
    for h in hits {
        if taken.iter().any(|t| t.start < h.range.end && h.range.start < t.end) {
            continue;
        }
        taken.push(h.range.clone());
        out.push(h);
    }
    out
}

struct Run {
    range: Range<usize>,
    sentence_initial: bool,
}

/// Maximal runs of capitalized words separated by single spaces or tabs,
/// never crossing sentence boundaries. Leading stop words ("The", "And") are
/// dropped from a run.
fn capitalized_runs(chars: &[char]) -> Vec<Run> {
    let input: String = chars.iter().collect();
    let sentence_starts: Vec<usize> = text::sentences(&input).iter().map(|s| s.start).collect();
    let tokens = text::tokenize(&input);
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !starts_upper(&tokens[i].text) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < tokens.len()
            && starts_upper(&tokens[j].text)
            && chars[tokens[j - 1].end..tokens[j].start].iter().all(|c| *c == ' ' || *c == '\t')
            && !sentence_starts.contains(&tokens[j].start)
        {
            j += 1;
        }
        let mut first = i;
        while first < j && (text::is_stop_word(&tokens[first].text) || tokens[first].text == "I") {
            first += 1;
        }
        // "Later Anna smiled": a capitalized opener is not part of the name
        if first == i && j - first > 1 && sentence_starts.contains(&tokens[first].start) && is_opener(&tokens[first].text) {
            first += 1;
        }
        if first < j {
            let start = tokens[first].start;
            runs.push(Run {
                range: start..tokens[j - 1].end,
                sentence_initial: first == i && sentence_starts.contains(&start),
            });
        }
        i = j;
    }
    runs
}

const OPENERS: &[&str] = &[
    "after", "afterwards", "again", "meanwhile", "later", "next", "now", "once", "perhaps", "soon", "still", "then",
    "thus", "today", "tomorrow", "yesterday", "yet",
];

fn is_opener(word: &str) -> bool {
    let w = word.to_lowercase();
    OPENERS.contains(&w.as_str()) || (w.len() > 5 && w.ends_with("ly"))
}

fn starts_upper(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

fn is_possessive(chars: &[char], end: usize) -> bool {
    matches!(chars.get(end), Some('\'' | '’')) && matches!(chars.get(end + 1), Some('s' | 'S'))
}

fn byte_to_char_map(s: &str) -> Vec<usize> {
    let mut map = vec![0; s.len() + 1];
    let mut n = 0;
    for (b, c) in s.char_indices() {
        for k in 0..c.len_utf8() {
            map[b + k] = n;
        }
        n += 1;
    }
    map[s.len()] = n;
    map
}

/// Drops leading determiners: "the old soldier" -> "soldier".
pub(crate) fn strip_determiners(surface: &str) -> &str {
    let mut rest = surface.trim();
    loop {
        let Some((head, tail)) = rest.split_once(char::is_whitespace) else { return rest };
        if DETERMINERS.contains(&head.to_lowercase().as_str()) {
            rest = tail.trim_start();
        } else {
            return rest;
        }
    }
}

impl Provider for RuleProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Rule
    }

    fn extract(&self, plan: &PromptPlan, input: &str) -> Result<Vec<CandidateEntity>, ExtractError> {
        if input.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        let out = accept(self.hits(plan, input))
            .into_iter()
            .map(|h| CandidateEntity {
                surface: h.surface,
                kind: h.kind,
                confidence: h.confidence,
                source_span: Some(TextSpan::new(0, h.range.start, h.range.end)),
            })
            .collect();
        Ok(dedup_candidates(out))
    }

    /// Alias unification: a candidate whose surface, with or without leading
    /// determiners, names a known entity takes that entity's canonical name
    /// and kind.
    fn refine(&self, plan: &PromptPlan, current: &[CandidateEntity]) -> Result<Vec<CandidateEntity>, ExtractError> {
        let out = current
            .iter()
            .map(|c| {
                let stripped = strip_determiners(&c.surface);
                let known = plan
                    .known_entities
                    .iter()
                    .find(|k| k.kind == c.kind && (k.answers_to(&c.surface) || k.answers_to(stripped)))
                    .or_else(|| plan.known_entities.iter().find(|k| k.answers_to(&c.surface) || k.answers_to(stripped)));
                match known {
                    Some(k) => CandidateEntity {
                        surface: k.name.clone(),
                        kind: k.kind,
                        confidence: self.confidence.user_marked,
                        source_span: c.source_span,
                    },
                    None => c.clone(),
                }
            })
            .collect();
        Ok(dedup_candidates(out))
    }

    fn summarize(&self, _plan: &PromptPlan, request: &SummaryRequest<'_>) -> Result<String, ExtractError> {
        if request.text.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        Ok(extractive_summary(request))
    }
}
