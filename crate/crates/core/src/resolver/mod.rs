//! Turns an operation request into the grounding it runs against.
//!
//! Precedence for page operations: documents mentioned with `@` first, then
//! the page holding the prompt, then pages that page mentions (one level
//! deep). A persona mentioned in the prompt overrides the page's default
//! persona. Inline prompts see only the selection plus whatever the prompt
//! mentions explicitly.

pub mod mention;
pub mod profile;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::engine::request::OperationRequest;
use crate::ids::{BlockId, DocumentId};
use crate::provider::persona::Persona;
use crate::store::{Document, Workspace};

pub use mention::{parse_mentions, Mention, MentionTarget, NameRegistry, RegistryEntry, TargetKind};
pub use profile::MeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingSource {
    ExplicitMention,
    HostPage,
    PageReference,
    InlineSelection,
    DefaultPersona,
    MentionPersona,
}

/// A span of paragraph text selected by the user. Offsets count chars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRange {
    pub document: DocumentId,
    pub block: BlockId,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BundleItem {
    Document {
        id: DocumentId,
        title: String,
        text: String,
        revision: u64,
    },
    Selection {
        range: SelectionRange,
    },
}

impl BundleItem {
    pub fn document_id(&self) -> Option<&DocumentId> {
        match self {
            BundleItem::Document { id, .. } => Some(id),
            BundleItem::Selection { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub item: BundleItem,
    pub source: GroundingSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePersona {
    pub id: DocumentId,
    pub persona: Persona,
    pub source: GroundingSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub documents: Vec<BundleEntry>,
    pub persona: Option<BundlePersona>,
    /// Workspace goal objective.
    pub goal: Option<String>,
    pub profile: Option<MeProfile>,
    pub mentions: Vec<Mention>,
    pub warnings: Vec<String>,
}

/// What to do with `@tokens` that match no page.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnresolvedPolicy {
    /// Keep going and record a warning.
    #[default]
    Warn,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("host page {0} does not exist")]
    UnknownHostPage(DocumentId),
    #[error("operation needs a host page")]
    MissingHostPage,
    #[error("inline prompt needs a selection")]
    MissingSelection,
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("unresolved mention {0}")]
    UnresolvedMention(String),
}

/// Resolved document mentions in the page's paragraphs, in order, without
/// duplicates. Referenced pages are not followed.
pub fn collect_page_references(page: &Document, registry: &NameRegistry) -> Vec<DocumentId> {
    let mut seen = HashSet::new();
    page.blocks
        .iter()
        .filter_map(|b| b.text())
        .flat_map(|text| parse_mentions(text, registry))
        .filter_map(|m| match m.target {
            MentionTarget::Document(id) => Some(id),
            _ => None,
        })
        .filter(|id| seen.insert(id.clone()))
        .collect()
}

fn validate_selection(sel: &SelectionRange, ws: &Workspace) -> Result<(), ResolveError> {
    let doc = ws
        .get(&sel.document)
        .ok_or_else(|| ResolveError::InvalidSelection(format!("document {} not found", sel.document)))?;
    let block = doc
        .block(&sel.block)
        .ok_or_else(|| ResolveError::InvalidSelection(format!("block {} not found", sel.block)))?;
    let text = block
        .text()
        .ok_or_else(|| ResolveError::InvalidSelection("selection must be inside a paragraph".into()))?;
    if sel.start >= sel.end {
        return Err(ResolveError::InvalidSelection("empty selection".into()));
    }
    let selected: String = text.chars().skip(sel.start).take(sel.end - sel.start).collect();
    if text.chars().count() < sel.end {
        return Err(ResolveError::InvalidSelection("offsets past end of block".into()));
    }
    if selected != sel.text {
        return Err(ResolveError::InvalidSelection("text does not match offsets".into()));
    }
    Ok(())
}

fn doc_item(doc: &Document) -> BundleItem {
    BundleItem::Document {
        id: doc.id.clone(),
        title: doc.title.clone(),
        text: doc.text(),
        revision: doc.revision,
    }
}

fn persona_from(ws: &Workspace, id: &DocumentId, source: GroundingSource) -> Option<BundlePersona> {
    let persona = ws.get(id)?.persona()?;
    Some(BundlePersona { id: id.clone(), persona, source })
}

/// Builds the grounding bundle for `request` against a workspace snapshot.
pub fn resolve_grounding(
    request: &OperationRequest,
    ws: &Workspace,
    policy: UnresolvedPolicy,
) -> Result<ContextBundle, ResolveError> {
    let registry = NameRegistry::from_workspace(ws);
    let mentions = parse_mentions(&request.prompt, &registry);

    let mut warnings = Vec::new();
    for m in mentions.iter().filter(|m| m.target == MentionTarget::Unresolved) {
        match policy {
            UnresolvedPolicy::Warn => warnings.push(format!("unresolved mention {}", m.raw)),
            UnresolvedPolicy::Reject => return Err(ResolveError::UnresolvedMention(m.raw.clone())),
        }
    }

    let mut documents: Vec<BundleEntry> = Vec::new();
    let mut seen: HashSet<DocumentId> = HashSet::new();
    let mut push = |documents: &mut Vec<BundleEntry>, doc: &Document, source| {
        if seen.insert(doc.id.clone()) {
            documents.push(BundleEntry { item: doc_item(doc), source });
        }
    };

    let explicit_docs: Vec<&Document> = mentions
        .iter()
        .filter_map(|m| match &m.target {
            MentionTarget::Document(id) => ws.get(id),
            _ => None,
        })
        .collect();
    let mentioned_persona = mentions.iter().find_map(|m| match &m.target {
        MentionTarget::Persona(id) => persona_from(ws, id, GroundingSource::MentionPersona),
        _ => None,
    });

    let persona = if request.is_inline() {
        let sel = request.selection.as_ref().ok_or(ResolveError::MissingSelection)?;
        validate_selection(sel, ws)?;
        documents.push(BundleEntry {
            item: BundleItem::Selection { range: sel.clone() },
            source: GroundingSource::InlineSelection,
        });
        for doc in explicit_docs {
            push(&mut documents, doc, GroundingSource::ExplicitMention);
        }
        mentioned_persona
    } else {
        let host_id = request.host_page.as_ref().ok_or(ResolveError::MissingHostPage)?;
        let host = ws.get(host_id).ok_or_else(|| ResolveError::UnknownHostPage(host_id.clone()))?;
        for doc in explicit_docs {
            push(&mut documents, doc, GroundingSource::ExplicitMention);
        }
        push(&mut documents, host, GroundingSource::HostPage);
        for id in collect_page_references(host, &registry) {
            if let Some(doc) = ws.get(&id) {
                push(&mut documents, doc, GroundingSource::PageReference);
            }
        }
        mentioned_persona.or_else(|| {
            host.default_persona
                .as_ref()
                .and_then(|id| persona_from(ws, id, GroundingSource::DefaultPersona))
        })
    };

    Ok(ContextBundle {
        documents,
        persona,
        goal: ws.goal.as_ref().map(|g| g.objective.clone()),
        profile: ws.me().map(MeProfile::from_page),
        mentions,
        warnings,
    })
}
