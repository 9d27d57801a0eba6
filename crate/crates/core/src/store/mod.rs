//! Workspace pages, their blocks, and the concurrent store that owns them.
//!
//! Every mutation of a document bumps its revision by exactly one. Callers
//! editing on behalf of a client pass the revision they last saw and get
//! [`StoreError::RevisionConflict`] when someone else got there first.
//!
//! Goal and task components on the Home page mirror [`Workspace::goal`]; they
//! are written only through the goal/task methods, never through generic
//! block edits. Result blocks likewise belong to the operation engine.

mod types;

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::Utc;
use parking_lot::RwLock;

use crate::engine::types::{Goal, Task, TaskStatus};
use crate::ids::{BlockId, DocumentId, TaskId};
use crate::provider::persona::Persona;

pub use types::{Block, BlockKind, BlockPayload, Document, DocumentFilter, DocumentKind, Edit, Workspace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("document {0} not found")]
    NotFound(DocumentId),
    #[error("block {0} not found")]
    BlockNotFound(BlockId),
    #[error("task {0} not found")]
    TaskNotFound(TaskId),
    #[error("a {0:?} page already exists")]
    DuplicateSingleton(DocumentKind),
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("revision conflict: expected {expected}, stored {actual}")]
    RevisionConflict { expected: u64, actual: u64 },
    #[error("{0:?} pages cannot be deleted")]
    ProtectedDocument(DocumentKind),
    #[error("block index {index} out of range (len {len})")]
    InvalidBlockIndex { index: usize, len: usize },
    #[error("{0} is not a persona page")]
    InvalidDefaultPersona(DocumentId),
    #[error("persona page body is invalid: {0}")]
    InvalidPersonaBody(String),
    #[error("{0:?} blocks are managed by the engine and cannot be edited directly")]
    ManagedBlock(BlockKind),
    #[error("task {0} already started")]
    AlreadyStarted(TaskId),
    #[error("workspace invariant violated: {0}")]
    Invariant(String),
}

/// Thread-safe owner of one workspace.
#[derive(Debug)]
pub struct DocumentStore {
    workspace: RwLock<Workspace>,
    writes: AtomicU64,
}

impl Default for DocumentStore {
    fn default() -> Self {
        Self::new()
    }
}

fn check_title(title: &str) -> Result<(), StoreError> {
    if title.trim().is_empty() {
        Err(StoreError::EmptyTitle)
    } else {
        Ok(())
    }
}

fn touch(doc: &mut Document) {
    doc.revision += 1;
    doc.updated_at = Utc::now();
}

fn renumber(doc: &mut Document) {
    for (i, b) in doc.blocks.iter_mut().enumerate() {
        b.order = i;
    }
}

fn check_unmanaged(payload: &BlockPayload) -> Result<(), StoreError> {
    match payload.kind() {
        k @ (BlockKind::ResultBlock | BlockKind::GoalComponent | BlockKind::TaskComponent) => {
            Err(StoreError::ManagedBlock(k))
        }
        _ => Ok(()),
    }
}

fn position(doc: &Document, block: &BlockId) -> Result<usize, StoreError> {
    doc.blocks
        .iter()
        .position(|b| &b.id == block)
        .ok_or_else(|| StoreError::BlockNotFound(block.clone()))
}

fn validate_persona_body(doc: &Document) -> Result<(), StoreError> {
    if doc.kind == DocumentKind::Persona {
        Persona::from_page_text(&doc.text()).map_err(|e| StoreError::InvalidPersonaBody(e.to_string()))?;
    }
    Ok(())
}

/// Applies `edits` to a copy of `doc`. Managed blocks are rejected unless
/// `managed` is set.
fn apply_edits(ws: &Workspace, doc: &Document, edits: Vec<Edit>, managed: bool) -> Result<Document, StoreError> {
    let mut next = doc.clone();
    for edit in edits {
        match edit {
            Edit::AppendBlock { payload } => {
                if !managed {
                    check_unmanaged(&payload)?;
                }
                next.blocks.push(Block::new(payload));
            }
            Edit::InsertBlock { index, payload } => {
                if !managed {
                    check_unmanaged(&payload)?;
                }
                if index > next.blocks.len() {
                    return Err(StoreError::InvalidBlockIndex { index, len: next.blocks.len() });
                }
                next.blocks.insert(index, Block::new(payload));
            }
            Edit::ReplaceBlock { block, payload } => {
                let at = position(&next, &block)?;
                if !managed {
                    check_unmanaged(&next.blocks[at].payload)?;
                    check_unmanaged(&payload)?;
                }
                next.blocks[at].payload = payload;
            }
            Edit::RemoveBlock { block } => {
                let at = position(&next, &block)?;
                if !managed {
                    check_unmanaged(&next.blocks[at].payload)?;
                }
                next.blocks.remove(at);
            }
            Edit::MoveBlock { block, index } => {
                let at = position(&next, &block)?;
                if index >= next.blocks.len() {
                    return Err(StoreError::InvalidBlockIndex { index, len: next.blocks.len() });
                }
                let b = next.blocks.remove(at);
                next.blocks.insert(index, b);
            }
            Edit::SetTitle { title } => {
                check_title(&title)?;
                next.title = title;
            }
            Edit::SetDefaultPersona { persona } => {
                if let Some(p) = &persona {
                    match ws.documents.get(p) {
                        Some(d) if d.kind == DocumentKind::Persona => {}
                        _ => return Err(StoreError::InvalidDefaultPersona(p.clone())),
                    }
                }
                next.default_persona = persona;
            }
        }
    }
    renumber(&mut next);
    validate_persona_body(&next)?;
    touch(&mut next);
    Ok(next)
}

/// Rebuilds the goal and task components on Home from `goal`, keeping every
/// other block in place. The components go where the first old one was.
fn mirror_goal(home: &mut Document, goal: &Goal) {
    let is_component = |b: &Block| matches!(b.kind(), BlockKind::GoalComponent | BlockKind::TaskComponent);
    let at = home.blocks.iter().take_while(|b| !is_component(b)).count();
    let mut old = std::mem::take(&mut home.blocks);
    let mut components: Vec<Block> = Vec::with_capacity(goal.tasks.len() + 1);
    let mut reuse = |payload: BlockPayload| -> Block {
        match old.iter().position(|b| b.payload == payload) {
            Some(i) => old.remove(i),
            None => Block::new(payload),
        }
    };
    components.push(reuse(BlockPayload::GoalComponent { objective: goal.objective.clone() }));
    for t in &goal.tasks {
        components.push(reuse(BlockPayload::TaskComponent { task: t.id.clone() }));
    }
    old.retain(|b| !is_component(b));
    let at = at.min(old.len());
    old.splice(at..at, components);
    home.blocks = old;
    renumber(home);
    touch(home);
}

impl DocumentStore {
    /// A fresh workspace holding only the Home and Me pages.
    pub fn new() -> Self {
        Self::from_workspace(Workspace::new()).expect("fresh workspace is valid")
    }

    pub fn from_workspace(ws: Workspace) -> Result<Self, StoreError> {
        ws.validate().map_err(StoreError::Invariant)?;
        Ok(Self { workspace: RwLock::new(ws), writes: AtomicU64::new(0) })
    }

    /// Number of successful write operations since construction.
    pub fn write_count(&self) -> u64 {
        self.writes.load(Ordering::Relaxed)
    }

    fn write<R>(&self, f: impl FnOnce(&mut Workspace) -> Result<R, StoreError>) -> Result<R, StoreError> {
        let mut ws = self.workspace.write();
        let out = f(&mut ws)?;
        self.writes.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// Runs `f` against a consistent snapshot under the read lock.
    pub fn read<R>(&self, f: impl FnOnce(&Workspace) -> R) -> R {
        f(&self.workspace.read())
    }

    pub fn snapshot(&self) -> Workspace {
        self.workspace.read().clone()
    }

    pub fn replace_workspace(&self, ws: Workspace) -> Result<(), StoreError> {
        ws.validate().map_err(StoreError::Invariant)?;
        self.write(|current| {
            *current = ws;
            Ok(())
        })
    }

    pub fn home_id(&self) -> DocumentId {
        self.read(|ws| ws.home().id.clone())
    }

    pub fn me_id(&self) -> Option<DocumentId> {
        self.read(|ws| ws.me().map(|d| d.id.clone()))
    }

    pub fn get(&self, id: &DocumentId) -> Result<Document, StoreError> {
        self.read(|ws| ws.documents.get(id).cloned())
            .ok_or_else(|| StoreError::NotFound(id.clone()))
    }

    pub fn create_document(
        &self,
        kind: DocumentKind,
        title: &str,
        initial_blocks: Vec<BlockPayload>,
    ) -> Result<Document, StoreError> {
        check_title(title)?;
        for p in &initial_blocks {
            check_unmanaged(p)?;
        }
        self.write(|ws| {
            if kind.is_singleton() && ws.documents.values().any(|d| d.kind == kind) {
                return Err(StoreError::DuplicateSingleton(kind));
            }
            let doc = Document::new(kind, title, initial_blocks);
            validate_persona_body(&doc)?;
            ws.documents.insert(doc.id.clone(), doc.clone());
            Ok(doc)
        })
    }

    /// Applies `edits` atomically if `expected_revision` is current.
    pub fn update_document(
        &self,
        id: &DocumentId,
        expected_revision: u64,
        edits: Vec<Edit>,
    ) -> Result<Document, StoreError> {
        self.write(|ws| {
            let doc = ws.documents.get(id).ok_or_else(|| StoreError::NotFound(id.clone()))?;
            if doc.revision != expected_revision {
                return Err(StoreError::RevisionConflict { expected: expected_revision, actual: doc.revision });
            }
            let next = apply_edits(ws, doc, edits, false)?;
            ws.documents.insert(id.clone(), next.clone());
            Ok(next)
        })
    }

    /// Engine-side edit against the latest revision; may touch managed blocks.
    pub(crate) fn edit_managed(&self, id: &DocumentId, edits: Vec<Edit>) -> Result<Document, StoreError> {
        self.write(|ws| {
            let doc = ws.documents.get(id).ok_or_else(|| StoreError::NotFound(id.clone()))?;
            let next = apply_edits(ws, doc, edits, true)?;
            ws.documents.insert(id.clone(), next.clone());
            Ok(next)
        })
    }

    /// Removes a page. Default-persona links, task personas and task working
    /// pages pointing at it are cleared; mentions in text are left alone and
    /// simply stop resolving.
    pub fn delete_document(&self, id: &DocumentId) -> Result<(), StoreError> {
        self.write(|ws| {
            let doc = ws.documents.get(id).ok_or_else(|| StoreError::NotFound(id.clone()))?;
            if doc.kind.is_protected() {
                return Err(StoreError::ProtectedDocument(doc.kind));
            }
            ws.documents.remove(id);
            for other in ws.documents.values_mut() {
                if other.default_persona.as_ref() == Some(id) {
                    other.default_persona = None;
                    touch(other);
                }
            }
            if let Some(goal) = ws.goal.as_mut() {
                for task in &mut goal.tasks {
                    if task.persona.as_ref() == Some(id) {
                        task.persona = None;
                    }
                    if task.working_page.as_ref() == Some(id) {
                        task.working_page = None;
                        task.status = TaskStatus::Open;
                    }
                }
            }
            Ok(())
        })
    }

    /// Sorted by kind group, then title, then id.
    pub fn query_documents(&self, filter: &DocumentFilter) -> Vec<Document> {
        self.read(|ws| ws.listing(filter).into_iter().cloned().collect())
    }

    pub fn task(&self, id: &TaskId) -> Result<Task, StoreError> {
        self.read(|ws| ws.task(id).cloned())
            .ok_or_else(|| StoreError::TaskNotFound(id.clone()))
    }

    /// Installs a new decomposition. Started tasks survive; open tasks are
    /// replaced by `new_tasks`. Returns the resulting goal.
    pub fn set_goal(&self, objective: &str, new_tasks: Vec<Task>) -> Result<Goal, StoreError> {
        self.write(|ws| {
            let mut tasks: Vec<Task> = ws
                .goal
                .take()
                .map(|g| g.tasks.into_iter().filter(|t| t.status == TaskStatus::Started).collect())
                .unwrap_or_default();
            tasks.extend(new_tasks);
            let goal = Goal { objective: objective.to_owned(), tasks };
            let home_id = ws.home().id.clone();
            let home = ws.documents.get_mut(&home_id).expect("home exists");
            mirror_goal(home, &goal);
            ws.goal = Some(goal.clone());
            Ok(goal)
        })
    }

    /// Creates the task's working page and marks the task started.
    pub fn start_task(&self, id: &TaskId) -> Result<Document, StoreError> {
        self.write(|ws| {
            let task = ws.task(id).ok_or_else(|| StoreError::TaskNotFound(id.clone()))?;
            if task.status == TaskStatus::Started {
                return Err(StoreError::AlreadyStarted(id.clone()));
            }
            let persona = task
                .persona
                .clone()
                .filter(|p| ws.documents.get(p).is_some_and(|d| d.kind == DocumentKind::Persona));
            let mut page = Document::new(DocumentKind::Workbook, &task.description, Vec::new());
            page.origin_task = Some(id.clone());
            page.default_persona = persona;
            ws.documents.insert(page.id.clone(), page.clone());
            let task = ws.task_mut(id).expect("checked above");
            task.status = TaskStatus::Started;
            task.working_page = Some(page.id.clone());
            Ok(page)
        })
    }

    /// Stores a generated persona for a task: updates the persona page with
    /// the same title if one exists, otherwise creates one. Records the name
    /// in the task's history and makes it the task's persona.
    pub fn attach_task_persona(&self, id: &TaskId, persona: &Persona) -> Result<Document, StoreError> {
        check_title(&persona.name)?;
        self.write(|ws| {
            ws.task(id).ok_or_else(|| StoreError::TaskNotFound(id.clone()))?;
            let body = vec![BlockPayload::Paragraph { text: persona.to_page_text() }];
            let existing = ws
                .documents
                .values()
                .find(|d| d.kind == DocumentKind::Persona && d.title == persona.name)
                .map(|d| d.id.clone());
            let page = match existing {
                Some(pid) => {
                    let doc = ws.documents.get_mut(&pid).expect("found above");
                    doc.blocks = body.into_iter().map(Block::new).collect();
                    renumber(doc);
                    touch(doc);
                    doc.clone()
                }
                None => {
                    let doc = Document::new(DocumentKind::Persona, &persona.name, body);
                    ws.documents.insert(doc.id.clone(), doc.clone());
                    doc
                }
            };
            let task = ws.task_mut(id).expect("checked above");
            task.persona_history.push(persona.name.clone());
            task.persona = Some(page.id.clone());
            Ok(page)
        })
    }
}
