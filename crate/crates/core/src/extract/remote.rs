use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CandidateEntity, ExtractError, KnownEntity, PromptPlan, Provider, ProviderKind, SummaryRequest};
use crate::model::{EntityKind, TextSpan};
use crate::text;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 2;
const ATTEMPTS: usize = 2;

/// Client for an external language-model service. Every call is one JSON
/// POST; a failed or malformed reply is retried once and then reported as
/// `ProviderUnavailable`. There is no fallback to another provider.
pub struct RemoteProvider {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
    permits: Semaphore,
}

impl std::fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteProvider").field("endpoint", &self.endpoint).finish_non_exhaustive()
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WireRequest<'a> {
    task: &'a str,
    role: &'a str,
    rules: &'a [String],
    known_entities: &'a [KnownEntity],
    trust_threshold: f64,
    text: &'a str,
    schema: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    previous: Option<Vec<WireEntity>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    highlights: Option<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireEntity {
    surface: String,
    kind: EntityKind,
    confidence: f64,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    #[serde(default)]
    entities: Vec<WireEntity>,
    #[serde(default)]
    summary: Option<String>,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        Self::with_limits(endpoint, token, DEFAULT_MAX_IN_FLIGHT, Duration::from_secs(60))
    }

    pub fn with_limits(endpoint: impl Into<String>, token: Option<String>, max_in_flight: usize, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self {
            endpoint: endpoint.into(),
            token,
            agent: ureq::Agent::new_with_config(config),
            permits: Semaphore::new(max_in_flight.max(1)),
        }
    }

    /// Reads `LM_ENDPOINT` and the optional `LM_TOKEN`.
    pub fn from_env() -> Result<Self, ExtractError> {
        let endpoint = std::env::var("LM_ENDPOINT")
            .ok()
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| ExtractError::ProviderUnavailable("LM_ENDPOINT is not set".into()))?;
        let token = std::env::var("LM_TOKEN").ok().filter(|s| !s.is_empty());
        Ok(Self::new(endpoint, token))
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call(&self, body: &WireRequest<'_>) -> Result<WireResponse, ExtractError> {
        let _permit = self.permits.acquire();
        let mut last = String::new();
        for _ in 0..ATTEMPTS {
            match self.post_once(body) {
                Ok(r) => return Ok(r),
                Err(e) => last = e,
            }
        }
        Err(ExtractError::ProviderUnavailable(last))
    }

    fn post_once(&self, body: &WireRequest<'_>) -> Result<WireResponse, String> {
        let mut req = self.agent.post(&self.endpoint).header("Accept", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("endpoint answered {status}"));
        }
        let raw: String = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        let parsed: WireResponse = serde_json::from_str(&raw).map_err(|e| format!("reply does not match schema: {e}"))?;
        for e in &parsed.entities {
            if e.surface.trim().is_empty() || !(0.0..=1.0).contains(&e.confidence) {
                return Err(format!("reply does not match schema: bad entity {e:?}"));
            }
        }
        Ok(parsed)
    }

    fn request<'a>(&self, task: &'a str, plan: &'a PromptPlan, text_in: &'a str) -> WireRequest<'a> {
        WireRequest {
            task,
            role: &plan.role_preamble,
            rules: &plan.chain_rules,
            known_entities: &plan.known_entities,
            trust_threshold: plan.trust_threshold,
            text: text_in,
            schema: &plan.output_schema,
            previous: None,
            highlights: None,
            budget: None,
        }
    }
}

impl Provider for RemoteProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::RemoteLm
    }

    fn extract(&self, plan: &PromptPlan, input: &str) -> Result<Vec<CandidateEntity>, ExtractError> {
        let reply = self.call(&self.request("extract", plan, input))?;
        // the wire format carries no offsets; anchor each surface at its
        // first occurrence and drop surfaces that do not occur
        let chars: Vec<char> = input.chars().collect();
        Ok(reply
            .entities
            .into_iter()
            .filter_map(|e| {
                let r = text::find_word_bounded(&chars, e.surface.trim()).into_iter().next()?;
                Some(CandidateEntity {
                    surface: e.surface.trim().to_owned(),
                    kind: e.kind,
                    confidence: e.confidence,
                    source_span: Some(TextSpan::new(0, r.start, r.end)),
                })
            })
            .collect())
    }

    fn refine(&self, plan: &PromptPlan, current: &[CandidateEntity]) -> Result<Vec<CandidateEntity>, ExtractError> {
        let mut body = self.request("refine", plan, "");
        body.previous = Some(
            current
                .iter()
                .map(|c| WireEntity { surface: c.surface.clone(), kind: c.kind, confidence: c.confidence })
                .collect(),
        );
        let reply = self.call(&body)?;
        Ok(reply
            .entities
            .into_iter()
            .map(|e| {
                let span = current
                    .iter()
                    .find(|c| c.kind == e.kind && text::fold(&c.surface) == text::fold(&e.surface))
                    .and_then(|c| c.source_span);
                CandidateEntity { surface: e.surface.trim().to_owned(), kind: e.kind, confidence: e.confidence, source_span: span }
            })
            .collect())
    }

    fn summarize(&self, plan: &PromptPlan, request: &SummaryRequest<'_>) -> Result<String, ExtractError> {
        let mut body = self.request("summarize", plan, request.text);
        body.highlights = Some(request.highlights.iter().map(|r| [r.start, r.end]).collect());
        body.budget = Some(request.budget);
        let reply = self.call(&body)?;
        reply
            .summary
            .ok_or_else(|| ExtractError::ProviderUnavailable("reply has no summary".into()))
    }
}

/// Counting semaphore bounding concurrent requests.
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}
