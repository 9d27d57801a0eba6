//! Append-only record of what grounded each job.
//!
//! A record lists only what the rendered prompt actually carried: documents
//! when the template has a `{context}` slot, the persona when it has a
//! `{persona}` slot, and so on.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::ids::{BlockId, DocumentId, JobId, RecordId};
use crate::prompt::{MetaPrompt, Placeholder, TemplateId};
use crate::resolver::{BundleItem, ContextBundle, GroundingSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum ProvenanceRef {
    Document(DocumentId),
    Selection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceDocument {
    pub reference: ProvenanceRef,
    pub source: GroundingSource,
    pub title: String,
    /// Page revision when the bundle was resolved. Absent for selections.
    pub revision: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenancePersona {
    pub id: DocumentId,
    pub name: String,
    pub source: GroundingSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileField {
    Preferences,
    EmotionalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub id: RecordId,
    pub job: JobId,
    pub template: TemplateId,
    pub params_digest: String,
    pub documents: Vec<ProvenanceDocument>,
    pub persona: Option<ProvenancePersona>,
    pub goal_included: bool,
    pub profile_fields_included: BTreeSet<ProfileField>,
    pub sampling: f64,
    pub created: DateTime<Utc>,
    pub warnings: Vec<String>,
}

impl ProvenanceRecord {
    pub fn build(
        job: JobId,
        bundle: &ContextBundle,
        prompt: &MetaPrompt,
        sampling: f64,
        warnings: Vec<String>,
    ) -> Self {
        let uses = prompt.template.template().placeholders();
        let has = |p: Placeholder| uses.contains(&p);

        let documents = if has(Placeholder::Context) {
            bundle
                .documents
                .iter()
                .map(|e| match &e.item {
                    BundleItem::Document { id, title, revision, .. } => ProvenanceDocument {
                        reference: ProvenanceRef::Document(id.clone()),
                        source: e.source,
                        title: title.clone(),
                        revision: Some(*revision),
                    },
                    BundleItem::Selection { .. } => ProvenanceDocument {
                        reference: ProvenanceRef::Selection,
                        source: e.source,
                        title: crate::prompt::serialize::SELECTION_TITLE.to_owned(),
                        revision: None,
                    },
                })
                .collect()
        } else {
            Vec::new()
        };
        let persona = if has(Placeholder::Persona) {
            bundle.persona.as_ref().map(|p| ProvenancePersona {
                id: p.id.clone(),
                name: p.persona.name.clone(),
                source: p.source,
            })
        } else {
            None
        };
        let mut profile_fields_included = BTreeSet::new();
        if bundle.profile.is_some() {
            if uses.iter().any(|p| p.is_preference_alias()) {
                profile_fields_included.insert(ProfileField::Preferences);
            }
            if has(Placeholder::EmotionalState) {
                profile_fields_included.insert(ProfileField::EmotionalState);
            }
        }
        ProvenanceRecord {
            id: RecordId::new(),
            job,
            template: prompt.template,
            params_digest: prompt.params_digest.clone(),
            documents,
            persona,
            goal_included: bundle.goal.is_some() && has(Placeholder::Goal),
            profile_fields_included,
            sampling,
            created: Utc::now(),
            warnings,
        }
    }

    pub fn titles(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.title.as_str()).collect()
    }

    /// Line-oriented text form. Field order is fixed.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "record {}", self.id);
        let _ = writeln!(out, "job {}", self.job);
        let _ = writeln!(out, "template {}", self.template);
        let _ = writeln!(out, "digest {}", self.params_digest);
        let _ = writeln!(out, "sampling {}", self.sampling);
        let _ = writeln!(out, "created {}", self.created.to_rfc3339_opts(SecondsFormat::Micros, true));
        for d in &self.documents {
            let (reference, rev) = match &d.reference {
                ProvenanceRef::Document(id) => (id.to_string(), d.revision.map(|r| format!(" rev {r}")).unwrap_or_default()),
                ProvenanceRef::Selection => ("selection".to_owned(), String::new()),
            };
            let _ = writeln!(out, "document {} {}{} {:?}", source_name(d.source), reference, rev, d.title);
        }
        match &self.persona {
            Some(p) => {
                let _ = writeln!(out, "persona {} {} {:?}", source_name(p.source), p.id, p.name);
            }
            None => out.push_str("persona none\n"),
        }
        let _ = writeln!(out, "goal {}", if self.goal_included { "included" } else { "omitted" });
        let fields: Vec<&str> = self
            .profile_fields_included
            .iter()
            .map(|f| match f {
                ProfileField::Preferences => "preferences",
                ProfileField::EmotionalState => "emotional_state",
            })
            .collect();
        let _ = writeln!(out, "profile {}", if fields.is_empty() { "none".to_owned() } else { fields.join(",") });
        for w in &self.warnings {
            let _ = writeln!(out, "warning {w:?}");
        }
        out
    }
}

fn source_name(s: GroundingSource) -> &'static str {
    match s {
        GroundingSource::ExplicitMention => "explicit_mention",
        GroundingSource::HostPage => "host_page",
        GroundingSource::PageReference => "page_reference",
        GroundingSource::InlineSelection => "inline_selection",
        GroundingSource::DefaultPersona => "default_persona",
        GroundingSource::MentionPersona => "mention_persona",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("job {0} already has a provenance record")]
    DuplicateRecord(JobId),
    #[error("no provenance for {0}")]
    NotFound(String),
}

#[derive(Debug, Clone)]
pub enum Lookup {
    Job(JobId),
    Block(BlockId),
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<Arc<ProvenanceRecord>>,
    by_job: HashMap<JobId, usize>,
    blocks: HashMap<BlockId, JobId>,
}

#[derive(Debug, Default)]
pub struct ProvenanceStore {
    inner: RwLock<Inner>,
}

impl ProvenanceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, record: ProvenanceRecord) -> Result<Arc<ProvenanceRecord>, ProvenanceError> {
        let mut inner = self.inner.write();
        if inner.by_job.contains_key(&record.job) {
            return Err(ProvenanceError::DuplicateRecord(record.job));
        }
        let rec = Arc::new(record);
        let idx = inner.records.len();
        inner.by_job.insert(rec.job.clone(), idx);
        inner.records.push(rec.clone());
        Ok(rec)
    }

    /// Points a result block at the job whose record it should show.
    pub fn link_block(&self, block: BlockId, job: JobId) {
        self.inner.write().blocks.insert(block, job);
    }

    pub fn block_job(&self, block: &BlockId) -> Option<JobId> {
        self.inner.read().blocks.get(block).cloned()
    }

    pub fn by_job(&self, job: &JobId) -> Result<Arc<ProvenanceRecord>, ProvenanceError> {
        let inner = self.inner.read();
        inner
            .by_job
            .get(job)
            .map(|&i| inner.records[i].clone())
            .ok_or_else(|| ProvenanceError::NotFound(format!("job {job}")))
    }

    pub fn get(&self, lookup: &Lookup) -> Result<Arc<ProvenanceRecord>, ProvenanceError> {
        match lookup {
            Lookup::Job(j) => self.by_job(j),
            Lookup::Block(b) => {
                let job = self.block_job(b).ok_or_else(|| ProvenanceError::NotFound(format!("block {b}")))?;
                self.by_job(&job)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.inner.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records in insertion order plus block links sorted by block id.
    pub fn export(&self) -> (Vec<ProvenanceRecord>, Vec<(BlockId, JobId)>) {
        let inner = self.inner.read();
        let mut links: Vec<(BlockId, JobId)> = inner.blocks.iter().map(|(b, j)| (b.clone(), j.clone())).collect();
        links.sort();
        (inner.records.iter().map(|r| (**r).clone()).collect(), links)
    }

    pub fn import(
        records: Vec<ProvenanceRecord>,
        links: Vec<(BlockId, JobId)>,
    ) -> Result<Self, ProvenanceError> {
        let store = Self::new();
        for r in records {
            store.record(r)?;
        }
        store.inner.write().blocks.extend(links);
        Ok(store)
    }

    pub fn replace_with(&self, other: ProvenanceStore) {
        *self.inner.write() = other.inner.into_inner();
    }
}
