//! Workspace archive.
//!
//! ```text
//! ORCHID-WS v1
//! {"record":"document", ...}      one per document, ascending id
//! {"record":"goal", ...}          at most one
//! {"record":"provenance", ...}    in recording order
//! {"record":"block_link","block":"...","job":"..."}   ascending block id
//! END <number of records>
//! ```
//!
//! Every line is UTF-8 and ends with `\n`. Records are single-line JSON
//! objects whose fields mirror the public types. Importing and exporting
//! again reproduces the bytes exactly.

use serde::{Deserialize, Serialize};

use crate::engine::types::Goal;
use crate::ids::{BlockId, JobId};
use crate::provenance::{ProvenanceRecord, ProvenanceStore};
use crate::store::{Document, DocumentStore, StoreError, Workspace};

pub const MAGIC: &str = "ORCHID-WS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArchiveError {
    #[error("malformed archive at line {line}: {reason}")]
    MalformedArchive { line: usize, reason: String },
    #[error("archive version {found} is not supported (expected {VERSION})")]
    VersionMismatch { found: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Document(Document),
    Goal(Goal),
    Provenance(ProvenanceRecord),
    BlockLink { block: BlockId, job: JobId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub workspace: Workspace,
    pub provenance: Vec<ProvenanceRecord>,
    pub links: Vec<(BlockId, JobId)>,
}

impl Archive {
    pub fn capture(store: &DocumentStore, provenance: &ProvenanceStore) -> Self {
        let (records, links) = provenance.export();
        Archive { workspace: store.snapshot(), provenance: records, links }
    }

    pub fn encode(&self) -> String {
        let mut lines = Vec::new();
        for doc in self.workspace.documents.values() {
            lines.push(Line::Document(doc.clone()));
        }
        if let Some(g) = &self.workspace.goal {
            lines.push(Line::Goal(g.clone()));
        }
        for r in &self.provenance {
            lines.push(Line::Provenance(r.clone()));
        }
        let mut links = self.links.clone();
        links.sort();
        for (block, job) in links {
            lines.push(Line::BlockLink { block, job });
        }
        let mut out = format!("{MAGIC} v{VERSION}\n");
        for l in &lines {
            out.push_str(&serde_json::to_string(l).expect("archive records serialize"));
            out.push('\n');
        }
        out.push_str(&format!("END {}\n", lines.len()));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ArchiveError> {
        let malformed = |line: usize, reason: &str| ArchiveError::MalformedArchive { line, reason: reason.to_owned() };
        let text = std::str::from_utf8(bytes).map_err(|e| malformed(0, &format!("not UTF-8: {e}")))?;
        let body = text.strip_suffix('\n').ok_or_else(|| malformed(0, "missing final newline"))?;
        let mut lines = body.split('\n');

        let header = lines.next().unwrap_or_default();
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|r| r.strip_prefix(" v"))
            .ok_or_else(|| malformed(1, "missing ORCHID-WS header"))?;
        if version != VERSION.to_string() {
            return Err(ArchiveError::VersionMismatch { found: version.to_owned() });
        }

        let mut workspace = Workspace { documents: Default::default(), goal: None };
        let mut provenance = Vec::new();
        let mut links = Vec::new();
        let mut count = 0usize;
        let mut trailer = None;
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if trailer.is_some() {
                return Err(malformed(line_no, "content after END"));
            }
            if let Some(n) = line.strip_prefix("END ") {
                let n: usize = n.parse().map_err(|_| malformed(line_no, "bad record count"))?;
                trailer = Some((line_no, n));
                continue;
            }
            let rec: Line = serde_json::from_str(line).map_err(|e| malformed(line_no, &e.to_string()))?;
            count += 1;
            match rec {
                Line::Document(d) => {
                    if workspace.documents.insert(d.id.clone(), d).is_some() {
                        return Err(malformed(line_no, "duplicate document id"));
                    }
                }
                Line::Goal(g) => {
                    if workspace.goal.replace(g).is_some() {
                        return Err(malformed(line_no, "more than one goal"));
                    }
                }
                Line::Provenance(r) => provenance.push(r),
                Line::BlockLink { block, job } => links.push((block, job)),
            }
        }
        match trailer {
            None => return Err(malformed(0, "truncated: no END line")),
            Some((line, n)) if n != count => {
                return Err(malformed(line, &format!("END says {n} records, found {count}")))
            }
            _ => {}
        }
        workspace.validate().map_err(|e| malformed(0, &e))?;
        ProvenanceStore::import(provenance.clone(), links.clone()).map_err(|e| malformed(0, &e.to_string()))?;
        Ok(Archive { workspace, provenance, links })
    }

    /// Replaces the contents of `store` and `provenance` with this archive.
    pub fn install(self, store: &DocumentStore, provenance: &ProvenanceStore) -> Result<(), StoreError> {
        let prov = ProvenanceStore::import(self.provenance, self.links)
            .map_err(|e| StoreError::Invariant(e.to_string()))?;
        store.replace_workspace(self.workspace)?;
        provenance.replace_with(prov);
        Ok(())
    }
}

pub fn export_workspace(store: &DocumentStore, provenance: &ProvenanceStore) -> Vec<u8> {
    Archive::capture(store, provenance).encode().into_bytes()
}

pub fn import_workspace(bytes: &[u8]) -> Result<Archive, ArchiveError> {
    Archive::decode(bytes)
}
