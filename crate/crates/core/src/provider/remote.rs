//! Completion over a plain JSON-over-HTTP endpoint.
//!
//! Request: `POST <endpoint>` with `{"prompt": str, "temperature": f64,
//! "max_tokens": u32}` and `Authorization: Bearer <token>` when a token is
//! configured. Response: `{"text": str}`.
//!
//! Transport failures, timeouts and 5xx answers are retried up to
//! `max_retries` times; 4xx answers are returned at once.

use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{CompletionParams, CompletionProvider, ProviderConfig, ProviderError};
use crate::prompt::MetaPrompt;

const BODY_EXCERPT: usize = 200;

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

pub struct RemoteHttpProvider {
    client: reqwest::Client,
    endpoint: reqwest::Url,
    token: Option<String>,
    timeout: Duration,
    max_retries: u32,
}

impl fmt::Debug for RemoteHttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteHttpProvider")
            .field("endpoint", &self.endpoint.as_str())
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .field("max_retries", &self.max_retries)
            .finish()
    }
}

/// At most `BODY_EXCERPT` chars, ellipsis included.
fn excerpt(s: &str) -> String {
    if s.chars().count() <= BODY_EXCERPT {
        return s.to_owned();
    }
    let cut = s.char_indices().nth(BODY_EXCERPT - 3).map_or(s.len(), |(i, _)| i);
    format!("{}...", &s[..cut])
}

enum Attempt {
    Done(Result<String, ProviderError>),
    Retry(ProviderError),
}

impl RemoteHttpProvider {
    /// Reads the token from the environment variable named in `config`.
    pub fn from_config(config: &ProviderConfig) -> Result<Self, String> {
        let token = config.token_var.as_deref().and_then(|v| std::env::var(v).ok());
        Self::new(config, token)
    }

    pub fn new(config: &ProviderConfig, token: Option<String>) -> Result<Self, String> {
        let endpoint = config.endpoint.as_deref().ok_or("remote provider needs an endpoint")?;
        let endpoint = reqwest::Url::parse(endpoint).map_err(|e| format!("bad endpoint {endpoint:?}: {e}"))?;
        let client = reqwest::Client::builder().build().map_err(|e| e.to_string())?;
        Ok(Self { client, endpoint, token, timeout: config.timeout, max_retries: config.max_retries })
    }

    async fn attempt(&self, body: &WireRequest<'_>) -> Attempt {
        let mut req = self.client.post(self.endpoint.clone()).json(body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let send = async {
            let resp = req.send().await?;
            let status = resp.status();
            let text = resp.text().await?;
            Ok::<_, reqwest::Error>((status, text))
        };
        match tokio::time::timeout(self.timeout, send).await {
            Err(_) => Attempt::Retry(ProviderError::Timeout(self.timeout)),
            Ok(Err(e)) => Attempt::Retry(ProviderError::RemoteError { status: None, body: excerpt(&e.to_string()) }),
            Ok(Ok((status, text))) if status.is_success() => Attempt::Done(
                serde_json::from_str::<WireResponse>(&text).map(|r| r.text).map_err(|e| {
                    ProviderError::RemoteError {
                        status: Some(status.as_u16()),
                        body: excerpt(&format!("unreadable response ({e}): {text}")),
                    }
                }),
            ),
            Ok(Ok((status, text))) => {
                let err = ProviderError::RemoteError { status: Some(status.as_u16()), body: excerpt(&text) };
                if status.is_server_error() {
                    Attempt::Retry(err)
                } else {
                    Attempt::Done(Err(err))
                }
            }
        }
    }
}

#[async_trait]
impl CompletionProvider for RemoteHttpProvider {
    async fn complete(&self, prompt: &MetaPrompt, params: &CompletionParams) -> Result<String, ProviderError> {
        let body = WireRequest {
            prompt: &prompt.text,
            temperature: params.temperature,
            max_tokens: params.max_output_tokens,
        };
        let mut last = None;
        for attempt in 0..=self.max_retries {
            match self.attempt(&body).await {
                Attempt::Done(r) => return r,
                Attempt::Retry(e) => {
                    tracing::warn!(attempt, error = %e, "provider attempt failed");
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}
