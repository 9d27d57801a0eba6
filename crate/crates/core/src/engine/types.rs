use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{DocumentId, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Ask,
    Search,
    Critique,
    Expand,
    FindGaps,
    Reflect,
    Revise,
    Summarize,
    InlinePrompt,
    ExecuteGoal,
    DoTask,
    GeneratePersona,
}

impl OperationKind {
    pub const ALL: [OperationKind; 12] = [
        OperationKind::Ask,
        OperationKind::Search,
        OperationKind::Critique,
        OperationKind::Expand,
        OperationKind::FindGaps,
        OperationKind::Reflect,
        OperationKind::Revise,
        OperationKind::Summarize,
        OperationKind::InlinePrompt,
        OperationKind::ExecuteGoal,
        OperationKind::DoTask,
        OperationKind::GeneratePersona,
    ];

    /// The eight creative operations offered by the "/" menu.
    pub const MENU: [OperationKind; 8] = [
        OperationKind::Ask,
        OperationKind::Search,
        OperationKind::Critique,
        OperationKind::Expand,
        OperationKind::FindGaps,
        OperationKind::Reflect,
        OperationKind::Revise,
        OperationKind::Summarize,
    ];

    pub fn is_menu_operation(self) -> bool {
        Self::MENU.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperationKind::Ask => "ask",
            OperationKind::Search => "search",
            OperationKind::Critique => "critique",
            OperationKind::Expand => "expand",
            OperationKind::FindGaps => "find_gaps",
            OperationKind::Reflect => "reflect",
            OperationKind::Revise => "revise",
            OperationKind::Summarize => "summarize",
            OperationKind::InlinePrompt => "inline_prompt",
            OperationKind::ExecuteGoal => "execute_goal",
            OperationKind::DoTask => "do_task",
            OperationKind::GeneratePersona => "generate_persona",
        }
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported operation {0:?}")]
pub struct UnsupportedOperation(pub String);

impl FromStr for OperationKind {
    type Err = UnsupportedOperation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == wanted)
            .ok_or_else(|| UnsupportedOperation(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureLevel {
    Precise,
    #[default]
    Balanced,
    Creative,
}

impl TemperatureLevel {
    pub const ALL: [TemperatureLevel; 3] = [
        TemperatureLevel::Precise,
        TemperatureLevel::Balanced,
        TemperatureLevel::Creative,
    ];
}

/// Sampling value per temperature level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureTable {
    pub precise: f64,
    pub balanced: f64,
    pub creative: f64,
}

impl Default for TemperatureTable {
    fn default() -> Self {
        Self {
            precise: 0.2,
            balanced: 0.7,
            creative: 1.0,
        }
    }
}

impl TemperatureTable {
    pub fn get(&self, level: TemperatureLevel) -> f64 {
        match level {
            TemperatureLevel::Precise => self.precise,
            TemperatureLevel::Balanced => self.balanced,
            TemperatureLevel::Creative => self.creative,
        }
    }

    /// Every value must be a sampling value in `[0, 2]`.
    pub fn validate(&self) -> Result<(), String> {
        for level in TemperatureLevel::ALL {
            let v = self.get(level);
            if !(0.0..=2.0).contains(&v) {
                return Err(format!("{level:?} sampling value {v} outside [0, 2]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Started,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub description: String,
    pub persona: Option<DocumentId>,
    pub working_page: Option<DocumentId>,
    /// Names of personas previously generated for this task, oldest first.
    pub persona_history: Vec<String>,
    pub status: TaskStatus,
}

impl Task {
    pub fn open(description: impl Into<String>) -> Self {
        Self {
            id: TaskId::new(),
            description: description.into(),
            persona: None,
            working_page: None,
            persona_history: Vec::new(),
            status: TaskStatus::Open,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub objective: String,
    pub tasks: Vec<Task>,
}
