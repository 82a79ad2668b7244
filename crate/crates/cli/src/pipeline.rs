//! The batch steps behind each subcommand, free of argument parsing so
//! tests can drive them directly.

use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;

use storyexp_core::extract::{extract_entities, keyword_weights, summarize, Gazetteer, KnownEntity, RemoteProvider};
use storyexp_core::layout::compute_layout;
use storyexp_core::model::{load_document, paginate, save_document, FragmentDraft};
use storyexp_core::render::render_storyline;
use storyexp_core::{
    EntityId, EntityKind, EntitySource, LayoutParams, LayoutSpec, Metrics, Provider, ProviderKind, RuleProvider,
    SceneConfig, StoryDocument, TextSpan,
};

use crate::CliError;

pub const DOCUMENT_FILE: &str = "document.json";

/// Keywords kept per seeded fragment.
const SEED_KEYWORDS: usize = 4;

/// A document argument may name the file or the directory holding it.
pub fn document_path(arg: &Path) -> PathBuf {
    if arg.is_dir() {
        arg.join(DOCUMENT_FILE)
    } else {
        arg.to_owned()
    }
}

pub fn load(arg: &Path) -> Result<(StoryDocument, PathBuf), CliError> {
    let path = document_path(arg);
    if !path.exists() {
        return Err(CliError::io(&path, std::io::ErrorKind::NotFound.into()));
    }
    Ok((load_document(&path)?, path))
}

pub fn save(doc: &StoryDocument, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(save_document(doc, path)?)
}

/// Lower-case id made of letters, digits and dashes.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches('-');
    if out.is_empty() { "document".to_owned() } else { out.chars().take(64).collect() }
}

pub fn import(text: &str, id: &str, title: &str, page_budget: usize) -> Result<StoryDocument, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::invalid("EmptyText", "text is empty"));
    }
    if page_budget == 0 {
        return Err(CliError::invalid("InvalidParams", "page size must be positive"));
    }
    Ok(StoryDocument::new(id, title, paginate(text, page_budget)))
}

pub fn provider(kind: ProviderKind, doc: &StoryDocument, extra: Option<&Gazetteer>) -> Result<Box<dyn Provider>, CliError> {
    Ok(match kind {
        ProviderKind::Rule => {
            let mut g = Gazetteer::builtin();
            if let Some(extra) = extra {
                g.extend(extra);
            }
            Box::new(RuleProvider::new(g, doc.config.rule_confidence))
        }
        ProviderKind::RemoteLm => Box::new(RemoteProvider::from_env()?),
    })
}

static PARAGRAPH_BREAK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\n[ \t\r]*\n").unwrap());

/// Paragraphs of the whole document as page spans, trimmed of surrounding
/// whitespace. A paragraph crossing a page break yields one span per page.
pub fn paragraphs(doc: &StoryDocument) -> Vec<Vec<TextSpan>> {
    let full: String = doc.pages.concat();
    let chars: Vec<char> = full.chars().collect();
    let page_starts: Vec<usize> = doc
        .pages
        .iter()
        .scan(0, |acc, p| {
            let s = *acc;
            *acc += p.chars().count();
            Some(s)
        })
        .collect();
    let mut bounds = Vec::new();
    let mut last = 0;
    for m in PARAGRAPH_BREAK.find_iter(&full) {
        bounds.push((last, full[..m.start()].chars().count()));
        last = full[..m.end()].chars().count();
    }
    bounds.push((last, chars.len()));

    let mut out = Vec::new();
    for (mut s, mut e) in bounds {
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s == e {
            continue;
        }
        let mut spans = Vec::new();
        for (p, &ps) in page_starts.iter().enumerate() {
            let pe = ps + doc.pages[p].chars().count();
            let (lo, hi) = (s.max(ps), e.min(pe));
            if lo < hi {
                spans.push(TextSpan::new(p, lo - ps, hi - ps));
            }
        }
        out.push(spans);
    }
    out
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ExtractSummary {
    pub entities_added: usize,
    pub fragments_added: usize,
    pub paragraphs: usize,
}

/// Reads every paragraph with the provider, adds the entities it finds and
/// seeds one fragment per paragraph that names a person. Fragments take
/// consecutive time steps in reading order; paragraphs already covered by a
/// fragment are left alone, so running twice adds nothing.
pub fn extract(doc: &mut StoryDocument, provider: &dyn Provider) -> Result<ExtractSummary, CliError> {
    let mut summary = ExtractSummary::default();
    let source = match provider.kind() {
        ProviderKind::Rule => EntitySource::ProviderRule,
        ProviderKind::RemoteLm => EntitySource::ProviderLlm,
    };
    let mut next_step = doc.fragments().iter().map(|f| f.interval.end + 1).max().unwrap_or(0);
    for spans in paragraphs(doc) {
        summary.paragraphs += 1;
        if doc.fragments().iter().any(|f| f.spans == spans) {
            continue;
        }
        let text: String = spans.iter().filter_map(|s| doc.span_text(s)).collect();
        let known: Vec<KnownEntity> = doc.entities().iter().map(KnownEntity::from).collect();
        let candidates = extract_entities(&text, &known, &doc.config, provider)?;

        let mut persons: Vec<EntityId> = Vec::new();
        let (mut time, mut place) = (None, None);
        for c in &candidates {
            let id = match doc.find_entity(Some(c.kind), &c.surface) {
                Some(e) => e.id.clone(),
                None => {
                    summary.entities_added += 1;
                    doc.add_entity(c.kind, &c.surface, source, c.confidence)?
                }
            };
            match c.kind {
                EntityKind::Person if !persons.contains(&id) => persons.push(id),
                EntityKind::Time if time.is_none() => time = Some(id),
                EntityKind::Place if place.is_none() => place = Some(id),
                _ => {}
            }
        }
        if persons.is_empty() {
            continue;
        }
        let names: Vec<String> =
            persons.iter().filter_map(|p| doc.display_name(p)).map(str::to_owned).collect();
        let named: Vec<String> = candidates.iter().map(|c| c.surface.to_lowercase()).collect();
        let keywords = keyword_weights(&text, &[], &names, &doc.config)?
            .into_iter()
            .map(|w| w.term)
            .filter(|t| !named.iter().any(|n| n.split_whitespace().any(|w| w == t)))
            .take(SEED_KEYWORDS)
            .collect();
        let event_summary = summarize(&text, &[], &names, &doc.config, provider)?;
        let fid = doc.create_fragment(FragmentDraft {
            persons,
            time,
            place,
            event_summary: Some(event_summary),
            spans,
            keywords,
        })?;
        doc.set_fragment_interval(&fid, next_step as i64, next_step as i64)?;
        next_step += 1;
        summary.fragments_added += 1;
    }
    Ok(summary)
}

/// Parses repeated `key=value` overrides over `base`.
pub fn layout_params(base: &LayoutParams, overrides: &[String]) -> Result<LayoutParams, CliError> {
    let mut p = base.clone();
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::invalid("InvalidParams", format!("expected key=value, got {o:?}")))?;
        p.set(k, v)?;
    }
    p.validate()?;
    Ok(p)
}

/// Fresh layout of the document's valid fragments.
pub fn layout(doc: &StoryDocument, params: &LayoutParams) -> Result<LayoutSpec, CliError> {
    let fragments = doc.layout_fragments();
    if fragments.is_empty() {
        return Err(CliError::invalid("NoFragments", "no fragments"));
    }
    Ok(compute_layout(&fragments, params)?)
}

/// Stores `spec` as the committed layout under a new version.
pub fn commit(doc: &mut StoryDocument, params: LayoutParams, spec: LayoutSpec) {
    doc.layout_params = params;
    doc.committed_layout = Some(spec);
    doc.layout_stale = false;
    doc.bump_version();
}

pub fn committed(doc: &StoryDocument) -> Result<&LayoutSpec, CliError> {
    doc.committed_layout
        .as_ref()
        .ok_or_else(|| CliError::invalid("NoCommittedLayout", "no committed layout; run `storyexp layout` first"))
}

/// SVG of the committed layout and any warnings raised while drawing it.
pub fn render(doc: &StoryDocument) -> Result<(String, Vec<String>), CliError> {
    let r = render_storyline(committed(doc)?, doc, &SceneConfig::default());
    Ok((r.svg, r.warnings))
}

/// Metrics of the committed layout, or of a fresh one when there is none or
/// it is stale.
pub fn metrics(doc: &StoryDocument) -> Result<Metrics, CliError> {
    match &doc.committed_layout {
        Some(spec) if !doc.layout_stale => Ok(spec.metrics),
        _ => Ok(layout(doc, &doc.layout_params)?.metrics),
    }
}
