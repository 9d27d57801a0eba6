//! Append-only log of job transitions and discarded results. Kept in memory
//! and, when a path is configured, appended to a file as JSON lines.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::job::JobState;
use crate::ids::{BlockId, DocumentId, JobId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditEvent {
    Transition {
        job: JobId,
        from: Option<JobState>,
        to: JobState,
    },
    Discarded {
        block: BlockId,
        page: DocumentId,
        job: JobId,
        result: Option<String>,
        history: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: AuditEvent,
}

#[derive(Debug, Default)]
pub struct AuditLog {
    entries: Mutex<Vec<AuditEntry>>,
    file: Option<Mutex<File>>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { entries: Mutex::default(), file: Some(Mutex::new(file)) })
    }

    pub fn append(&self, event: AuditEvent) {
        let entry = AuditEntry { at: Utc::now(), event };
        if let Some(f) = &self.file {
            let mut line = serde_json::to_string(&entry).expect("audit entries serialize");
            line.push('\n');
            if let Err(e) = f.lock().write_all(line.as_bytes()) {
                tracing::error!(error = %e, "audit log write failed");
            }
        }
        self.entries.lock().push(entry);
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.entries.lock().clone()
    }

    /// State changes recorded for one job, in order.
    pub fn transitions(&self, job: &JobId) -> Vec<(Option<JobState>, JobState)> {
        self.entries
            .lock()
            .iter()
            .filter_map(|e| match &e.event {
                AuditEvent::Transition { job: j, from, to } if j == job => Some((*from, *to)),
                _ => None,
            })
            .collect()
    }
}
