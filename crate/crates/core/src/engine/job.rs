use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::request::OperationRequest;
use crate::ids::{BlockId, JobId, RecordId};
use crate::prompt::TemplateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running,
    Complete,
    Failed,
    Cancelled,
}

impl JobState {
    pub const ALL: [JobState; 5] =
        [JobState::Pending, JobState::Running, JobState::Complete, JobState::Failed, JobState::Cancelled];

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Complete | JobState::Failed | JobState::Cancelled)
    }

    /// Pending → Running → {Complete, Failed}, and Cancelled from either
    /// non-terminal state. Nothing leaves a terminal state.
    pub fn can_transition(self, to: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, to),
            (Pending, Running) | (Running, Complete) | (Running, Failed) | (Pending, Cancelled) | (Running, Cancelled)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub request: OperationRequest,
    pub template: TemplateId,
    pub state: JobState,
    /// Set iff the job is Complete.
    pub result: Option<String>,
    pub error: Option<String>,
    pub provenance: RecordId,
    /// Result block showing this job, if any.
    pub block: Option<BlockId>,
    pub sampling: f64,
    pub warnings: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// Outcome the job's runner reports back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobEvent {
    Start,
    Succeed(String),
    Fail(String),
    Cancel,
}

impl JobEvent {
    pub fn target(&self) -> JobState {
        match self {
            JobEvent::Start => JobState::Running,
            JobEvent::Succeed(_) => JobState::Complete,
            JobEvent::Fail(_) => JobState::Failed,
            JobEvent::Cancel => JobState::Cancelled,
        }
    }
}

impl Job {
    /// Applies `event` if the state machine allows it. Returns the previous
    /// state on success; a refused event leaves the job untouched.
    pub fn apply(&mut self, event: JobEvent) -> Option<JobState> {
        let from = self.state;
        let to = event.target();
        if !from.can_transition(to) {
            return None;
        }
        match event {
            JobEvent::Succeed(text) => self.result = Some(text),
            JobEvent::Fail(err) => self.error = Some(err),
            JobEvent::Cancel => self.error = Some("cancelled".into()),
            JobEvent::Start => {}
        }
        self.state = to;
        self.updated_at = Utc::now();
        Some(from)
    }
}
