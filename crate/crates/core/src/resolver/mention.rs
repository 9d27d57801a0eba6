//! `@` mention scanning against a registry of page titles and persona names.
//!
//! Names compare case-insensitively with `_` and space treated as the same
//! character. At each `@` the longest registered name wins, provided it ends
//! at a word boundary. An `@word` that matches nothing becomes an unresolved
//! mention carrying the raw token.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ids::DocumentId;
use crate::store::{DocumentKind, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    DocumentRef,
    PersonaRef,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum MentionTarget {
    Document(DocumentId),
    Persona(DocumentId),
    Unresolved,
}

impl MentionTarget {
    pub fn kind(&self) -> TargetKind {
        match self {
            MentionTarget::Document(_) => TargetKind::DocumentRef,
            MentionTarget::Persona(_) => TargetKind::PersonaRef,
            MentionTarget::Unresolved => TargetKind::Unresolved,
        }
    }

    pub fn id(&self) -> Option<&DocumentId> {
        match self {
            MentionTarget::Document(id) | MentionTarget::Persona(id) => Some(id),
            MentionTarget::Unresolved => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    /// Matched text including the `@`.
    pub raw: String,
    pub target: MentionTarget,
    /// Byte offsets into the scanned text.
    pub span: Range<usize>,
}

pub fn normalize_char(c: char) -> char {
    if c == '_' {
        ' '
    } else {
        c.to_lowercase().next().unwrap_or(c)
    }
}

pub fn normalize(name: &str) -> String {
    name.trim().chars().map(normalize_char).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<char, usize>,
    target: Option<MentionTarget>,
}

/// A registered name as shown to users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    pub target: MentionTarget,
}

#[derive(Debug, Default)]
pub struct NameRegistry {
    nodes: Vec<TrieNode>,
    entries: Vec<RegistryEntry>,
}

impl NameRegistry {
    /// Builds a registry. On a normalized-name collision a persona beats a
    /// document; otherwise the earlier entry wins.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = (S, MentionTarget)>,
        S: Into<String>,
    {
        let mut reg = NameRegistry { nodes: vec![TrieNode::default()], entries: Vec::new() };
        for (name, target) in names {
            let name = name.into();
            let normalized = normalize(&name);
            if normalized.is_empty() || target == MentionTarget::Unresolved {
                continue;
            }
            let mut node = 0;
            for c in normalized.chars() {
                node = match reg.nodes[node].children.get(&c) {
                    Some(&n) => n,
                    None => {
                        reg.nodes.push(TrieNode::default());
                        let n = reg.nodes.len() - 1;
                        reg.nodes[node].children.insert(c, n);
                        n
                    }
                };
            }
            let slot = &mut reg.nodes[node].target;
            let replace = match slot {
                None => true,
                Some(MentionTarget::Document(_)) => matches!(target, MentionTarget::Persona(_)),
                Some(_) => false,
            };
            if replace {
                *slot = Some(target.clone());
            }
            reg.entries.push(RegistryEntry { name, target });
        }
        reg
    }

    /// Page titles plus persona names, in listing order.
    pub fn from_workspace(ws: &Workspace) -> Self {
        let mut names = Vec::new();
        for doc in ws.listing(&Default::default()) {
            if doc.kind == DocumentKind::Persona {
                names.push((doc.title.clone(), MentionTarget::Persona(doc.id.clone())));
                if let Some(p) = doc.persona() {
                    names.push((p.name, MentionTarget::Persona(doc.id.clone())));
                }
            } else {
                names.push((doc.title.clone(), MentionTarget::Document(doc.id.clone())));
            }
        }
        Self::new(names)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    /// The target a full name resolves to, after normalization.
    pub fn lookup(&self, name: &str) -> Option<&MentionTarget> {
        let mut node = 0;
        for c in normalize(name).chars() {
            node = *self.nodes[node].children.get(&c)?;
        }
        self.nodes[node].target.as_ref()
    }

    /// Autocomplete candidates for the text typed after `@`: personas first,
    /// then documents, each group in registry order, one entry per target.
    pub fn candidates(&self, prefix: &str) -> Vec<&RegistryEntry> {
        let p: String = prefix.chars().map(normalize_char).collect();
        let mut seen = std::collections::HashSet::new();
        let mut hits: Vec<&RegistryEntry> = self
            .entries
            .iter()
            .filter(|e| normalize(&e.name).starts_with(&p))
            .filter(|e| seen.insert(e.target.clone()))
            .collect();
        hits.sort_by_key(|e| e.target.kind() != TargetKind::PersonaRef);
        hits
    }

    /// Longest registered name starting at byte `start`, as (end, target).
    fn longest_match(&self, text: &str, start: usize) -> Option<(usize, &MentionTarget)> {
        let mut node = 0;
        let mut best = None;
        let mut chars = text[start..].char_indices().peekable();
        while let Some((off, c)) = chars.next() {
            match self.nodes[node].children.get(&normalize_char(c)) {
                Some(&n) => node = n,
                None => break,
            }
            let end = start + off + c.len_utf8();
            if let Some(target) = &self.nodes[node].target {
                let at_boundary = chars.peek().is_none_or(|&(_, next)| !is_word_char(next));
                if at_boundary {
                    best = Some((end, target));
                }
            }
        }
        best
    }
}

/// Scans `text` left to right for mentions. Spans never overlap.
pub fn parse_mentions(text: &str, registry: &NameRegistry) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut prev: Option<char> = None;
    let mut iter = text.char_indices();
    while let Some((i, c)) = iter.next() {
        let starts_mention = c == '@' && prev.is_none_or(|p| !p.is_alphanumeric());
        prev = Some(c);
        if !starts_mention {
            continue;
        }
        let name_start = i + 1;
        let (end, target) = match registry.longest_match(text, name_start) {
            Some((end, target)) => (end, target.clone()),
            None => {
                let len: usize = text[name_start..]
                    .chars()
                    .take_while(|&c| is_word_char(c) || c == '-')
                    .map(char::len_utf8)
                    .sum();
                if len == 0 {
                    continue;
                }
                (name_start + len, MentionTarget::Unresolved)
            }
        };
        out.push(Mention { raw: text[i..end].to_owned(), target, span: i..end });
        // Skip past the mention; `prev` is the last consumed char.
        while let Some((j, c)) = iter.clone().next() {
            if j >= end {
                break;
            }
            prev = Some(c);
            iter.next();
        }
    }
    out
}
