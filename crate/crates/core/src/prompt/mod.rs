//! Template selection and rendering.

pub mod serialize;
pub mod template;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::types::OperationKind;

pub use serialize::{escape, serialize_bundle, GENERIC_EXECUTOR};
pub use template::{ParameterMap, Placeholder, Segment, Template, TemplateId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("missing required parameter {{{}}}", .0.as_str())]
    MissingRequiredParameter(Placeholder),
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("malformed template near {0:?}")]
    MalformedTemplate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPrompt {
    pub template: TemplateId,
    pub text: String,
    /// Hex SHA-256 over the parameters the template consumed.
    pub params_digest: String,
}

/// Every operation kind renders through some template.
pub fn select_template(kind: OperationKind, has_persona: bool) -> TemplateId {
    use OperationKind::*;
    let pick = |with, without| if has_persona { with } else { without };
    match kind {
        InlinePrompt => TemplateId::ContextPrompt,
        Ask | Search | Summarize => pick(TemplateId::AskPersona, TemplateId::AskNoPersona),
        FindGaps | Revise | Expand => pick(TemplateId::MasterPersona, TemplateId::MasterNoPersona),
        Critique | Reflect => pick(TemplateId::CritiquePersona, TemplateId::CritiqueNoPersona),
        ExecuteGoal => TemplateId::Todo,
        DoTask => TemplateId::DoTask,
        GeneratePersona => TemplateId::MakePersona,
    }
}

/// Digest of `params` restricted to `keys`. Each entry contributes its name,
/// a NUL, the value length as little-endian u64 and the value bytes.
pub fn params_digest(params: &ParameterMap, keys: &[Placeholder]) -> String {
    let mut h = Sha256::new();
    for (k, v) in params.0.iter().filter(|(k, _)| keys.contains(k)) {
        h.update(k.as_str().as_bytes());
        h.update([0u8]);
        h.update((v.len() as u64).to_le_bytes());
        h.update(v.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn render_meta_prompt(template: TemplateId, params: &ParameterMap) -> Result<MetaPrompt, PromptError> {
    let t = template.template();
    let text = t.render(params)?;
    Ok(MetaPrompt { template, params_digest: params_digest(params, &t.placeholders()), text })
}
