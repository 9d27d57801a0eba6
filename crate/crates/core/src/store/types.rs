use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::types::{Goal, OperationKind, Task, TaskStatus, TemperatureLevel};
use crate::ids::{BlockId, DocumentId, JobId, TaskId};
use crate::provider::persona::Persona;

/// Page type. Declaration order is the listing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Home,
    Me,
    Workbook,
    Context,
    Persona,
}

impl DocumentKind {
    pub fn is_singleton(self) -> bool {
        matches!(self, DocumentKind::Home | DocumentKind::Me)
    }

    pub fn is_protected(self) -> bool {
        self.is_singleton()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Paragraph,
    OperationComponent,
    ResultBlock,
    GoalComponent,
    TaskComponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockPayload {
    Paragraph {
        text: String,
    },
    OperationComponent {
        operation: OperationKind,
        prompt: String,
        #[serde(default)]
        temperature: TemperatureLevel,
    },
    /// Holds the job currently shown and the results it replaced.
    ResultBlock {
        job: JobId,
        history: Vec<String>,
    },
    GoalComponent {
        objective: String,
    },
    TaskComponent {
        task: TaskId,
    },
}

impl BlockPayload {
    pub fn paragraph(text: impl Into<String>) -> Self {
        BlockPayload::Paragraph { text: text.into() }
    }

    pub fn kind(&self) -> BlockKind {
        match self {
            BlockPayload::Paragraph { .. } => BlockKind::Paragraph,
            BlockPayload::OperationComponent { .. } => BlockKind::OperationComponent,
            BlockPayload::ResultBlock { .. } => BlockKind::ResultBlock,
            BlockPayload::GoalComponent { .. } => BlockKind::GoalComponent,
            BlockPayload::TaskComponent { .. } => BlockKind::TaskComponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub order: usize,
    #[serde(flatten)]
    pub payload: BlockPayload,
}

impl Block {
    pub(crate) fn new(payload: BlockPayload) -> Self {
        Self { id: BlockId::new(), order: 0, payload }
    }

    pub fn kind(&self) -> BlockKind {
        self.payload.kind()
    }

    pub fn text(&self) -> Option<&str> {
        match &self.payload {
            BlockPayload::Paragraph { text } => Some(text),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocumentId,
    pub kind: DocumentKind,
    pub title: String,
    pub blocks: Vec<Block>,
    pub default_persona: Option<DocumentId>,
    pub origin_task: Option<TaskId>,
    pub revision: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl Document {
    pub(crate) fn new(kind: DocumentKind, title: &str, blocks: Vec<BlockPayload>) -> Self {
        let now = Utc::now();
        let blocks = blocks
            .into_iter()
            .enumerate()
            .map(|(i, p)| Block { order: i, ..Block::new(p) })
            .collect();
        Self {
            id: DocumentId::new(),
            kind,
            title: title.to_owned(),
            blocks,
            default_persona: None,
            origin_task: None,
            revision: 1,
            created_at: now,
            updated_at: now,
        }
    }

    /// Paragraph text, one paragraph per line.
    pub fn text(&self) -> String {
        self.blocks.iter().filter_map(Block::text).collect::<Vec<_>>().join("\n")
    }

    pub fn block(&self, id: &BlockId) -> Option<&Block> {
        self.blocks.iter().find(|b| &b.id == id)
    }

    /// Parsed persona body, for Persona pages.
    pub fn persona(&self) -> Option<Persona> {
        (self.kind == DocumentKind::Persona)
            .then(|| Persona::from_page_text(&self.text()).ok())
            .flatten()
    }
}

/// Block mutation applied by [`super::DocumentStore::update_document`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AppendBlock { payload: BlockPayload },
    InsertBlock { index: usize, payload: BlockPayload },
    ReplaceBlock { block: BlockId, payload: BlockPayload },
    RemoveBlock { block: BlockId },
    MoveBlock { block: BlockId, index: usize },
    SetTitle { title: String },
    SetDefaultPersona { persona: Option<DocumentId> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentFilter {
    pub kind: Option<DocumentKind>,
    pub title_prefix: Option<String>,
}

impl DocumentFilter {
    pub fn kind(kind: DocumentKind) -> Self {
        Self { kind: Some(kind), title_prefix: None }
    }

    pub fn title_prefix(prefix: impl Into<String>) -> Self {
        Self { kind: None, title_prefix: Some(prefix.into()) }
    }

    pub fn matches(&self, doc: &Document) -> bool {
        self.kind.is_none_or(|k| k == doc.kind)
            && self.title_prefix.as_deref().is_none_or(|p| doc.title.starts_with(p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub documents: BTreeMap<DocumentId, Document>,
    pub goal: Option<Goal>,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    /// Home and Me pages only.
    pub fn new() -> Self {
        let mut documents = BTreeMap::new();
        for (kind, title) in [(DocumentKind::Home, "Home"), (DocumentKind::Me, "Me")] {
            let d = Document::new(kind, title, Vec::new());
            documents.insert(d.id.clone(), d);
        }
        Self { documents, goal: None }
    }

    pub fn home(&self) -> &Document {
        self.documents
            .values()
            .find(|d| d.kind == DocumentKind::Home)
            .expect("workspace always has a home page")
    }

    pub fn me(&self) -> Option<&Document> {
        self.documents.values().find(|d| d.kind == DocumentKind::Me)
    }

    pub fn get(&self, id: &DocumentId) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn task(&self, id: &TaskId) -> Option<&Task> {
        self.goal.as_ref()?.tasks.iter().find(|t| &t.id == id)
    }

    pub(crate) fn task_mut(&mut self, id: &TaskId) -> Option<&mut Task> {
        self.goal.as_mut()?.tasks.iter_mut().find(|t| &t.id == id)
    }

    pub fn find_block(&self, id: &BlockId) -> Option<(&Document, &Block)> {
        self.documents
            .values()
            .find_map(|d| d.block(id).map(|b| (d, b)))
    }

    pub fn listing(&self, filter: &DocumentFilter) -> Vec<&Document> {
        let mut docs: Vec<&Document> = self.documents.values().filter(|d| filter.matches(d)).collect();
        docs.sort_by(|a, b| (a.kind, &a.title, &a.id).cmp(&(b.kind, &b.title, &b.id)));
        docs
    }

    /// Checks singleton, reference and block-numbering invariants.
    pub fn validate(&self) -> Result<(), String> {
        let count = |k| self.documents.values().filter(|d| d.kind == k).count();
        if count(DocumentKind::Home) != 1 {
            return Err(format!("expected exactly one home page, found {}", count(DocumentKind::Home)));
        }
        if count(DocumentKind::Me) > 1 {
            return Err("more than one me page".into());
        }
        let mut block_ids = HashSet::new();
        for (key, d) in &self.documents {
            if key != &d.id {
                return Err(format!("document keyed {key} has id {}", d.id));
            }
            if d.title.trim().is_empty() {
                return Err(format!("document {} has an empty title", d.id));
            }
            if d.revision == 0 {
                return Err(format!("document {} has revision 0", d.id));
            }
            for (i, b) in d.blocks.iter().enumerate() {
                if b.order != i {
                    return Err(format!("document {} block order not contiguous", d.id));
                }
                if !block_ids.insert(&b.id) {
                    return Err(format!("duplicate block id {}", b.id));
                }
            }
            if let Some(p) = &d.default_persona {
                match self.documents.get(p) {
                    Some(pd) if pd.kind == DocumentKind::Persona => {}
                    _ => return Err(format!("document {} has dangling default persona {p}", d.id)),
                }
            }
            if d.kind == DocumentKind::Persona {
                Persona::from_page_text(&d.text()).map_err(|e| format!("persona page {}: {e}", d.id))?;
            }
        }
        if let Some(goal) = &self.goal {
            for t in &goal.tasks {
                if let Some(p) = &t.persona {
                    if !self.documents.contains_key(p) {
                        return Err(format!("task {} has dangling persona {p}", t.id));
                    }
                }
                match (&t.working_page, t.status) {
                    (Some(w), TaskStatus::Started) if self.documents.contains_key(w) => {}
                    (None, TaskStatus::Open) => {}
                    _ => return Err(format!("task {} working page does not match status", t.id)),
                }
            }
        }
        Ok(())
    }
}
