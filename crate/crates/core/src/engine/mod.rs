//! Operation lifecycle: submission, asynchronous execution, result-block
//! actions, goal decomposition, task pages and persona generation.
//!
//! Submission resolves grounding, renders the prompt, places a result block
//! and records provenance before returning; the provider call runs on a
//! Tokio task. Jobs never write to pages. Only user actions do (placing a
//! result block, inserting a result, storing tasks or personas).

pub mod audit;
pub mod job;
pub mod request;
pub mod types;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use chrono::Utc;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Semaphore};
use tokio::task::AbortHandle;

use crate::ids::{BlockId, DocumentId, JobId, TaskId};
use crate::prompt::{render_meta_prompt, select_template, serialize_bundle, MetaPrompt, Placeholder, PromptError};
use crate::provenance::{ProvenanceError, ProvenanceRecord, ProvenanceStore};
use crate::provider::{
    parse_persona_response, parse_todo_response, CompletionParams, CompletionProvider, MalformedPersona,
    ProviderError,
};
use crate::resolver::{resolve_grounding, ContextBundle, ResolveError, UnresolvedPolicy};
use crate::store::{BlockPayload, Document, DocumentStore, Edit, StoreError};

use audit::{AuditEvent, AuditLog};
pub use job::{Job, JobEvent, JobState};
pub use request::OperationRequest;
pub use types::{Goal, OperationKind, Task, TaskStatus, TemperatureLevel, TemperatureTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub temperatures: TemperatureTable,
    pub max_concurrent_jobs: usize,
    #[serde(with = "crate::provider::secs")]
    pub job_timeout: Duration,
    pub max_output_tokens: u32,
    pub unresolved: UnresolvedPolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            temperatures: TemperatureTable::default(),
            max_concurrent_jobs: 8,
            job_timeout: Duration::from_secs(120),
            max_output_tokens: 1024,
            unresolved: UnresolvedPolicy::Warn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid request: {0}")]
    Validation(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error("job {0} not found")]
    JobNotFound(JobId),
    #[error("block {0} not found")]
    BlockNotFound(BlockId),
    #[error("block {0} is not a result block")]
    NotAResultBlock(BlockId),
    #[error("job {job} is {state:?}; action needs a complete job")]
    InvalidState { job: JobId, state: JobState },
    #[error("objective must not be empty")]
    EmptyObjective,
    #[error("task {0} has not been started")]
    NotStarted(TaskId),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("persona response rejected: {0}")]
    MalformedPersona(MalformedPersona),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultAction {
    Insert,
    Regenerate,
    Discard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ActionOutcome {
    Inserted { page: Document, paragraph: BlockId },
    Regenerated { page: Document, job: JobId },
    Discarded { page: Document },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalOutcome {
    pub job: JobId,
    pub goal: Goal,
    /// Tasks created by this decomposition, at most five.
    pub tasks: Vec<Task>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaOutcome {
    pub page: Document,
    pub task: Task,
    /// One job per attempt.
    pub jobs: Vec<JobId>,
}

/// What a dry run would send, without creating a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub bundle: ContextBundle,
    pub prompt: MetaPrompt,
    pub provenance: ProvenanceRecord,
}

enum Placement {
    None,
    NewBlock,
    Existing { block: BlockId, history: Vec<String> },
}

struct JobEntry {
    job: Job,
    failure: Option<ProviderError>,
    abort: Option<AbortHandle>,
    state: watch::Sender<JobState>,
}

struct Inner {
    store: Arc<DocumentStore>,
    provenance: Arc<ProvenanceStore>,
    provider: Arc<dyn CompletionProvider>,
    config: EngineConfig,
    permits: Arc<Semaphore>,
    jobs: Mutex<HashMap<JobId, JobEntry>>,
    audit: AuditLog,
    runtime: tokio::runtime::Handle,
}

/// Cheap to clone; clones share state.
#[derive(Clone)]
pub struct Engine {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("config", &self.inner.config).finish_non_exhaustive()
    }
}

impl Inner {
    /// Applies a job event and logs it. Returns false when refused.
    fn apply(&self, id: &JobId, event: JobEvent, failure: Option<ProviderError>) -> bool {
        let mut jobs = self.jobs.lock();
        let Some(entry) = jobs.get_mut(id) else { return false };
        let Some(from) = entry.job.apply(event) else { return false };
        let to = entry.job.state;
        if failure.is_some() {
            entry.failure = failure;
        }
        if to == JobState::Cancelled {
            entry.failure = Some(ProviderError::Cancelled);
            if let Some(h) = entry.abort.take() {
                h.abort();
            }
        }
        self.audit.append(AuditEvent::Transition { job: id.clone(), from: Some(from), to });
        entry.state.send_replace(to);
        true
    }

    async fn run(self: Arc<Self>, id: JobId, prompt: MetaPrompt, params: CompletionParams) {
        let _permit = self.permits.clone().acquire_owned().await.expect("semaphore is never closed");
        if !self.apply(&id, JobEvent::Start, None) {
            return;
        }
        let timeout = self.config.job_timeout;
        let outcome = match tokio::time::timeout(timeout, self.provider.complete(&prompt, &params)).await {
            Ok(r) => r,
            Err(_) => Err(ProviderError::Timeout(timeout)),
        };
        match outcome {
            Ok(text) => self.apply(&id, JobEvent::Succeed(text), None),
            Err(e) => self.apply(&id, JobEvent::Fail(e.to_string()), Some(e)),
        };
    }
}

impl Engine {
    /// Must be called from within a Tokio runtime; jobs are spawned on it.
    pub fn new(
        store: Arc<DocumentStore>,
        provenance: Arc<ProvenanceStore>,
        provider: Arc<dyn CompletionProvider>,
        config: EngineConfig,
    ) -> Self {
        Self::with_audit(store, provenance, provider, config, AuditLog::in_memory())
    }

    pub fn with_audit(
        store: Arc<DocumentStore>,
        provenance: Arc<ProvenanceStore>,
        provider: Arc<dyn CompletionProvider>,
        config: EngineConfig,
        audit: AuditLog,
    ) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_concurrent_jobs.max(1)));
        Self {
            inner: Arc::new(Inner {
                store,
                provenance,
                provider,
                config,
                permits,
                jobs: Mutex::default(),
                audit,
                runtime: tokio::runtime::Handle::current(),
            }),
        }
    }

    pub fn store(&self) -> &Arc<DocumentStore> {
        &self.inner.store
    }

    pub fn provenance(&self) -> &Arc<ProvenanceStore> {
        &self.inner.provenance
    }

    pub fn audit(&self) -> &AuditLog {
        &self.inner.audit
    }

    pub fn config(&self) -> &EngineConfig {
        &self.inner.config
    }

    pub fn map_temperature(&self, level: TemperatureLevel) -> f64 {
        self.inner.config.temperatures.get(level)
    }

    fn prepare(&self, request: &OperationRequest, task: Option<&Task>) -> Result<Preview, EngineError> {
        request.validate().map_err(EngineError::Validation)?;
        let bundle = self
            .inner
            .store
            .read(|ws| resolve_grounding(request, ws, self.inner.config.unresolved))?;
        let template = select_template(request.kind, bundle.persona.is_some());
        let mut params = serialize_bundle(&bundle, request);
        let history = task.map(|t| t.persona_history.join(", ")).unwrap_or_default();
        params.set(Placeholder::Exception, crate::prompt::escape(&history));
        let prompt = render_meta_prompt(template, &params)?;
        let sampling = self.map_temperature(request.temperature);
        let provenance = ProvenanceRecord::build(JobId::new(), &bundle, &prompt, sampling, bundle.warnings.clone());
        Ok(Preview { bundle, prompt, provenance })
    }

    /// Resolves and renders `request` without submitting it.
    pub fn preview(&self, request: &OperationRequest) -> Result<Preview, EngineError> {
        self.prepare(request, None)
    }

    fn place_block(&self, request: &OperationRequest, job: &JobId, placement: Placement) -> Result<Option<BlockId>, EngineError> {
        let (page_id, edit, block_id) = match placement {
            Placement::None => return Ok(None),
            Placement::Existing { block, history } => {
                let page = self
                    .inner
                    .store
                    .read(|ws| ws.find_block(&block).map(|(d, _)| d.id.clone()))
                    .ok_or_else(|| EngineError::BlockNotFound(block.clone()))?;
                let payload = BlockPayload::ResultBlock { job: job.clone(), history };
                (page, Edit::ReplaceBlock { block: block.clone(), payload }, block)
            }
            Placement::NewBlock => {
                let page_id = request.target_page().cloned().ok_or_else(|| {
                    EngineError::Validation("request has no page to place a result on".into())
                })?;
                let page = self.inner.store.get(&page_id)?;
                let after = request.anchor.as_ref().or(request.selection.as_ref().map(|s| &s.block));
                let index = match after {
                    Some(b) => {
                        page.block(b)
                            .ok_or_else(|| EngineError::Validation(format!("block {b} is not on page {page_id}")))?
                            .order
                            + 1
                    }
                    None => page.blocks.len(),
                };
                let payload = BlockPayload::ResultBlock { job: job.clone(), history: Vec::new() };
                let updated = self.inner.store.edit_managed(&page_id, vec![Edit::InsertBlock { index, payload }])?;
                let block = updated.blocks[index].id.clone();
                self.inner.provenance.link_block(block.clone(), job.clone());
                return Ok(Some(block));
            }
        };
        self.inner.store.edit_managed(&page_id, vec![edit])?;
        self.inner.provenance.link_block(block_id.clone(), job.clone());
        Ok(Some(block_id))
    }

    fn launch(&self, request: OperationRequest, task: Option<&Task>, placement: Placement) -> Result<JobId, EngineError> {
        let Preview { prompt, mut provenance, .. } = self.prepare(&request, task)?;
        let id = provenance.job.clone();
        let params = CompletionParams::new(provenance.sampling, self.inner.config.max_output_tokens)?;
        let block = self.place_block(&request, &id, placement)?;
        let warnings = provenance.warnings.clone();
        provenance.created = Utc::now();
        let record = self.inner.provenance.record(provenance)?;
        let now = Utc::now();
        let job = Job {
            id: id.clone(),
            template: prompt.template,
            request,
            state: JobState::Pending,
            result: None,
            error: None,
            provenance: record.id.clone(),
            block,
            sampling: record.sampling,
            warnings,
            created_at: now,
            updated_at: now,
        };
        {
            let mut jobs = self.inner.jobs.lock();
            let (tx, _) = watch::channel(JobState::Pending);
            jobs.insert(id.clone(), JobEntry { job, failure: None, abort: None, state: tx });
            self.inner.audit.append(AuditEvent::Transition { job: id.clone(), from: None, to: JobState::Pending });
        }
        let handle = self.inner.runtime.spawn(self.inner.clone().run(id.clone(), prompt, params));
        if let Some(entry) = self.inner.jobs.lock().get_mut(&id) {
            if entry.job.state.is_terminal() {
                handle.abort();
            } else {
                entry.abort = Some(handle.abort_handle());
            }
        }
        Ok(id)
    }

    /// Starts a page or inline operation and returns at once. Goal, task and
    /// persona kinds have their own entry points.
    pub fn submit_operation(&self, request: OperationRequest) -> Result<JobId, EngineError> {
        if matches!(
            request.kind,
            OperationKind::ExecuteGoal | OperationKind::DoTask | OperationKind::GeneratePersona
        ) {
            return Err(EngineError::Validation(format!(
                "{} is submitted through its own entry point",
                request.kind
            )));
        }
        self.launch(request, None, Placement::NewBlock)
    }

    pub fn poll_job(&self, id: &JobId) -> Result<Job, EngineError> {
        self.inner
            .jobs
            .lock()
            .get(id)
            .map(|e| e.job.clone())
            .ok_or_else(|| EngineError::JobNotFound(id.clone()))
    }

    pub fn jobs(&self) -> Vec<Job> {
        let mut out: Vec<Job> = self.inner.jobs.lock().values().map(|e| e.job.clone()).collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        out
    }

    /// Moves a non-terminal job to Cancelled and abandons its provider call.
    /// Terminal jobs are returned unchanged.
    pub fn cancel_job(&self, id: &JobId) -> Result<Job, EngineError> {
        self.poll_job(id)?;
        self.inner.apply(id, JobEvent::Cancel, None);
        self.poll_job(id)
    }

    /// Waits until the job reaches a terminal state.
    pub async fn wait_job(&self, id: &JobId) -> Result<Job, EngineError> {
        let mut rx = {
            let jobs = self.inner.jobs.lock();
            jobs.get(id).ok_or_else(|| EngineError::JobNotFound(id.clone()))?.state.subscribe()
        };
        // The sender lives in the job table, which never drops entries.
        let _ = rx.wait_for(|s| s.is_terminal()).await;
        self.poll_job(id)
    }

    async fn wait_result(&self, id: &JobId) -> Result<String, EngineError> {
        let job = self.wait_job(id).await?;
        if let Some(text) = job.result {
            return Ok(text);
        }
        let failure = self.inner.jobs.lock().get(id).and_then(|e| e.failure.clone());
        Err(EngineError::Provider(failure.unwrap_or(ProviderError::Cancelled)))
    }

    fn add_warning(&self, id: &JobId, warning: String) {
        if let Some(e) = self.inner.jobs.lock().get_mut(id) {
            e.job.warnings.push(warning);
        }
    }

    pub fn apply_result_action(&self, block: &BlockId, action: ResultAction) -> Result<ActionOutcome, EngineError> {
        let (page_id, payload) = self
            .inner
            .store
            .read(|ws| ws.find_block(block).map(|(d, b)| (d.id.clone(), b.payload.clone())))
            .ok_or_else(|| EngineError::BlockNotFound(block.clone()))?;
        let BlockPayload::ResultBlock { job: job_id, history } = payload else {
            return Err(EngineError::NotAResultBlock(block.clone()));
        };
        let job = self.poll_job(&job_id)?;
        let complete = |job: &Job| {
            job.result.clone().ok_or_else(|| EngineError::InvalidState { job: job.id.clone(), state: job.state })
        };
        match action {
            ResultAction::Insert => {
                let text = complete(&job)?;
                let page = self.inner.store.get(&page_id)?;
                let order = page.block(block).map(|b| b.order).ok_or_else(|| EngineError::BlockNotFound(block.clone()))?;
                let page = self.inner.store.edit_managed(
                    &page_id,
                    vec![Edit::InsertBlock { index: order + 1, payload: BlockPayload::paragraph(text) }],
                )?;
                let paragraph = page.blocks[order + 1].id.clone();
                Ok(ActionOutcome::Inserted { page, paragraph })
            }
            ResultAction::Regenerate => {
                let text = complete(&job)?;
                let mut history = history;
                history.push(text);
                let new_job =
                    self.launch(job.request.clone(), None, Placement::Existing { block: block.clone(), history })?;
                Ok(ActionOutcome::Regenerated { page: self.inner.store.get(&page_id)?, job: new_job })
            }
            ResultAction::Discard => {
                if !job.state.is_terminal() {
                    self.cancel_job(&job_id)?;
                }
                let page = self.inner.store.edit_managed(&page_id, vec![Edit::RemoveBlock { block: block.clone() }])?;
                self.inner.audit.append(AuditEvent::Discarded {
                    block: block.clone(),
                    page: page_id,
                    job: job_id,
                    result: job.result,
                    history,
                });
                Ok(ActionOutcome::Discarded { page })
            }
        }
    }

    /// Decomposes `objective` into at most five tasks and installs them as
    /// the workspace goal. Open tasks from an earlier goal are replaced;
    /// started ones are kept.
    pub async fn execute_goal(&self, objective: &str, temperature: TemperatureLevel) -> Result<GoalOutcome, EngineError> {
        let objective = objective.trim();
        if objective.is_empty() {
            return Err(EngineError::EmptyObjective);
        }
        let home = self.inner.store.home_id();
        let request = OperationRequest::new(OperationKind::ExecuteGoal, objective, home).with_temperature(temperature);
        let job = self.launch(request, None, Placement::None)?;
        let text = self.wait_result(&job).await?;
        let mut warnings = Vec::new();
        let items = match parse_todo_response(&text) {
            Ok(plan) => {
                if let Some(w) = plan.warning() {
                    warnings.push(w);
                }
                plan.items
            }
            Err(_) => {
                warnings.push("plan had no usable items".to_owned());
                Vec::new()
            }
        };
        for w in &warnings {
            self.add_warning(&job, w.clone());
        }
        let tasks: Vec<Task> = items.into_iter().map(Task::open).collect();
        let goal = self.inner.store.set_goal(objective, tasks.clone())?;
        Ok(GoalOutcome { job, goal, tasks, warnings })
    }

    pub fn start_task(&self, task: &TaskId) -> Result<Document, EngineError> {
        Ok(self.inner.store.start_task(task)?)
    }

    /// Generates a persona for the task, retrying once with the identical
    /// prompt when the reply does not parse.
    pub async fn generate_task_persona(&self, task_id: &TaskId) -> Result<PersonaOutcome, EngineError> {
        let task = self.inner.store.task(task_id)?;
        let home = self.inner.store.home_id();
        let request = OperationRequest::new(OperationKind::GeneratePersona, task.description.clone(), home);
        let mut jobs = Vec::new();
        let mut last = None;
        for _ in 0..2 {
            let job = self.launch(request.clone(), Some(&task), Placement::None)?;
            jobs.push(job.clone());
            let text = self.wait_result(&job).await?;
            match parse_persona_response(&text) {
                Ok(persona) => {
                    let page = self.inner.store.attach_task_persona(task_id, &persona)?;
                    let task = self.inner.store.task(task_id)?;
                    return Ok(PersonaOutcome { page, task, jobs });
                }
                Err(e) => {
                    self.add_warning(&job, format!("persona response rejected: {e}"));
                    last = Some(e);
                }
            }
        }
        Err(EngineError::MalformedPersona(last.expect("two attempts ran")))
    }

    /// Runs a started task on its working page.
    pub fn do_task(&self, task_id: &TaskId, temperature: TemperatureLevel) -> Result<JobId, EngineError> {
        let task = self.inner.store.task(task_id)?;
        let page: DocumentId = match (&task.status, &task.working_page) {
            (TaskStatus::Started, Some(p)) => p.clone(),
            _ => return Err(EngineError::NotStarted(task_id.clone())),
        };
        let request =
            OperationRequest::new(OperationKind::DoTask, task.description.clone(), page).with_temperature(temperature);
        self.launch(request, Some(&task), Placement::NewBlock)
    }

    /// Waits up to `timeout` for running jobs, then cancels whatever is left.
    /// Returns the number of jobs cancelled.
    pub async fn drain(&self, timeout: Duration) -> usize {
        let pending: Vec<JobId> =
            self.jobs().into_iter().filter(|j| !j.state.is_terminal()).map(|j| j.id).collect();
        let wait_all = async {
            for id in &pending {
                let _ = self.wait_job(id).await;
            }
        };
        let _ = tokio::time::timeout(timeout, wait_all).await;
        let mut cancelled = 0;
        for id in pending {
            if self.inner.apply(&id, JobEvent::Cancel, None) {
                cancelled += 1;
            }
        }
        cancelled
    }
}
