//! Deterministic provider driven by a fixture table.
//!
//! Responses are looked up by template and parameter digest, then by
//! template alone (digest `*`). Anything else gets `ECHO:<digest>`.
//!
//! Fixture files hold one JSON object per line:
//! `{"template": "Todo", "digest": "*", "response": "1. ..."}`.
//! A `responses` array can replace `response`; successive calls then walk
//! the array and repeat its last entry.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use parking_lot::Mutex;
use serde::Deserialize;

use super::{CompletionParams, CompletionProvider, ProviderError};
use crate::prompt::{MetaPrompt, TemplateId};

pub const ANY_DIGEST: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedResponse {
    Text(String),
    Fail(ProviderError),
}

#[derive(Debug)]
struct Entry {
    responses: Vec<ScriptedResponse>,
    next: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureLine {
    template: String,
    #[serde(default = "any_digest")]
    digest: String,
    #[serde(default)]
    response: Option<String>,
    #[serde(default)]
    responses: Option<Vec<String>>,
}

fn any_digest() -> String {
    ANY_DIGEST.to_owned()
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("fixture line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("reading fixtures: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default)]
pub struct ScriptedProvider {
    table: Mutex<HashMap<(TemplateId, String), Entry>>,
    latency: Option<Duration>,
    started: AtomicUsize,
    finished: AtomicUsize,
    log: Mutex<Vec<MetaPrompt>>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every call waits this long before answering.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = Some(latency);
        self
    }

    pub fn respond(self, template: TemplateId, digest: &str, text: impl Into<String>) -> Self {
        self.respond_seq(template, digest, vec![ScriptedResponse::Text(text.into())])
    }

    pub fn respond_any(self, template: TemplateId, text: impl Into<String>) -> Self {
        self.respond(template, ANY_DIGEST, text)
    }

    pub fn fail_any(self, template: TemplateId, err: ProviderError) -> Self {
        self.respond_seq(template, ANY_DIGEST, vec![ScriptedResponse::Fail(err)])
    }

    pub fn respond_seq(self, template: TemplateId, digest: &str, responses: Vec<ScriptedResponse>) -> Self {
        assert!(!responses.is_empty(), "scripted entry needs at least one response");
        self.table.lock().insert((template, digest.to_owned()), Entry { responses, next: 0 });
        self
    }

    pub fn from_fixtures(text: &str) -> Result<Self, FixtureError> {
        let mut provider = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let invalid = |reason: String| FixtureError::Invalid { line: line_no, reason };
            let f: FixtureLine = serde_json::from_str(line).map_err(|e| invalid(e.to_string()))?;
            let template: TemplateId = f.template.parse().map_err(invalid)?;
            let responses = match (f.response, f.responses) {
                (Some(r), None) => vec![r],
                (None, Some(rs)) if !rs.is_empty() => rs,
                _ => return Err(invalid("exactly one of response / non-empty responses".into())),
            };
            provider = provider.respond_seq(
                template,
                &f.digest,
                responses.into_iter().map(ScriptedResponse::Text).collect(),
            );
        }
        Ok(provider)
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, FixtureError> {
        Self::from_fixtures(&std::fs::read_to_string(path)?)
    }

    /// Calls that reached the provider, including ones later abandoned.
    pub fn calls_started(&self) -> usize {
        self.started.load(Ordering::SeqCst)
    }

    pub fn calls_finished(&self) -> usize {
        self.finished.load(Ordering::SeqCst)
    }

    /// Prompts received so far, in arrival order.
    pub fn prompts(&self) -> Vec<MetaPrompt> {
        self.log.lock().clone()
    }

    fn lookup(&self, prompt: &MetaPrompt) -> ScriptedResponse {
        let mut table = self.table.lock();
        let exact = (prompt.template, prompt.params_digest.clone());
        let wildcard = (prompt.template, ANY_DIGEST.to_owned());
        let key = if table.contains_key(&exact) { exact } else { wildcard };
        match table.get_mut(&key) {
            Some(entry) => {
                let r = entry.responses[entry.next.min(entry.responses.len() - 1)].clone();
                entry.next += 1;
                r
            }
            None => ScriptedResponse::Text(format!("ECHO:{}", prompt.params_digest)),
        }
    }
}

#[async_trait]
impl CompletionProvider for ScriptedProvider {
    async fn complete(&self, prompt: &MetaPrompt, _params: &CompletionParams) -> Result<String, ProviderError> {
        self.started.fetch_add(1, Ordering::SeqCst);
        self.log.lock().push(prompt.clone());
        if let Some(d) = self.latency {
            tokio::time::sleep(d).await;
        }
        let out = match self.lookup(prompt) {
            ScriptedResponse::Text(t) => Ok(t),
            ScriptedResponse::Fail(e) => Err(e),
        };
        self.finished.fetch_add(1, Ordering::SeqCst);
        out
    }
}
