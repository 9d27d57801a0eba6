use serde::{Deserialize, Serialize};

use super::types::{OperationKind, TemperatureLevel};
use crate::ids::{BlockId, DocumentId};
use crate::resolver::SelectionRange;

/// One generative operation as submitted by a client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationRequest {
    pub kind: OperationKind,
    /// User prompt; the objective for goal execution, the task text for tasks.
    #[serde(default)]
    pub prompt: String,
    #[serde(default)]
    pub host_page: Option<DocumentId>,
    #[serde(default)]
    pub selection: Option<SelectionRange>,
    /// Block the result should be placed after. Defaults to the selection's
    /// block for inline prompts and to the end of the page otherwise.
    #[serde(default)]
    pub anchor: Option<BlockId>,
    #[serde(default)]
    pub temperature: TemperatureLevel,
}

impl OperationRequest {
    pub fn new(kind: OperationKind, prompt: impl Into<String>, host_page: DocumentId) -> Self {
        Self {
            kind,
            prompt: prompt.into(),
            host_page: Some(host_page),
            selection: None,
            anchor: None,
            temperature: TemperatureLevel::default(),
        }
    }

    pub fn inline(prompt: impl Into<String>, selection: SelectionRange) -> Self {
        Self {
            kind: OperationKind::InlinePrompt,
            prompt: prompt.into(),
            host_page: None,
            selection: Some(selection),
            anchor: None,
            temperature: TemperatureLevel::default(),
        }
    }

    pub fn with_temperature(mut self, t: TemperatureLevel) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_anchor(mut self, block: BlockId) -> Self {
        self.anchor = Some(block);
        self
    }

    pub fn is_inline(&self) -> bool {
        self.kind == OperationKind::InlinePrompt
    }

    /// The page the result block lands on.
    pub fn target_page(&self) -> Option<&DocumentId> {
        if self.is_inline() {
            self.selection.as_ref().map(|s| &s.document)
        } else {
            self.host_page.as_ref()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.is_inline() {
            if self.selection.is_none() {
                return Err("inline prompt requires a selection".into());
            }
            if self.prompt.trim().is_empty() {
                return Err("inline prompt requires prompt text".into());
            }
        } else if self.host_page.is_none() {
            return Err(format!("{} requires a host page", self.kind));
        }
        if self.kind == OperationKind::ExecuteGoal && self.prompt.trim().is_empty() {
            return Err("goal execution requires an objective".into());
        }
        Ok(())
    }
}
