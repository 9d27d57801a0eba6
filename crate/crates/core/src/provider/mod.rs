//! Completion back ends and parsers for their structured replies.

pub mod persona;
pub mod remote;
pub mod scripted;
pub mod todo;

use std::path::PathBuf;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::prompt::MetaPrompt;

pub use persona::{parse_persona_response, MalformedPersona, Persona};
pub use remote::RemoteHttpProvider;
pub use scripted::{ScriptedProvider, ScriptedResponse};
pub use todo::{parse_todo_response, EmptyPlan, TodoPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionParams {
    pub fn new(temperature: f64, max_output_tokens: u32) -> Result<Self, ProviderError> {
        if !(0.0..=2.0).contains(&temperature) {
            return Err(ProviderError::InvalidParams(format!("temperature {temperature} outside [0, 2]")));
        }
        Ok(Self { temperature, max_output_tokens })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    /// `status` is absent when no HTTP response was received.
    #[error("provider request failed{}: {body}", .status.map(|s| format!(" with status {s}")).unwrap_or_default())]
    RemoteError { status: Option<u16>, body: String },
    #[error("completion cancelled")]
    Cancelled,
    #[error("invalid completion parameters: {0}")]
    InvalidParams(String),
}

#[async_trait]
pub trait CompletionProvider: Send + Sync {
    async fn complete(&self, prompt: &MetaPrompt, params: &CompletionParams) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Scripted,
    RemoteHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_var: Option<String>,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_retries: u32,
    /// Fixture file for the scripted provider. Without one the scripted
    /// provider only echoes digests.
    pub fixtures: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Scripted,
            endpoint: None,
            token_var: None,
            timeout: Duration::from_secs(60),
            max_retries: 2,
            fixtures: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.kind == ProviderKind::RemoteHttp {
            match &self.endpoint {
                None => return Err(("provider.endpoint", "required for remote_http".into())),
                Some(e) => match reqwest::Url::parse(e) {
                    Err(_) => return Err(("provider.endpoint", format!("not a URL: {e}"))),
                    Ok(u) if u.scheme() != "http" => {
                        return Err(("provider.endpoint", format!("only http:// endpoints are supported, got {e}")))
                    }
                    Ok(_) => {}
                },
            }
        }
        if self.timeout.is_zero() {
            return Err(("provider.timeout", "must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}
