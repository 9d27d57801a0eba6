use orchid::ids::DocumentId;
use orchid::resolver::{parse_mentions, MentionTarget, NameRegistry};
use tokio::runtime::Runtime;

use crate::support::{data_path, ensure, Outcome};

struct Entry {
    name: String,
    target: MentionTarget,
}

/// (raw, target, byte span)
type Found = (String, MentionTarget, usize, usize);

fn fold(c: char) -> char {
    if c == '_' {
        ' '
    } else {
        c.to_lowercase().next().unwrap_or(c)
    }
}

fn word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Tries every registered name at every `@` and keeps the longest hit.
fn brute_force(text: &str, registry: &[Entry]) -> Vec<Found> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map(|&(b, _)| b).unwrap_or(text.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let at_start = chars[i].1 == '@' && (i == 0 || !chars[i - 1].1.is_alphanumeric());
        if !at_start {
            i += 1;
            continue;
        }
        let mut best: Option<(usize, &Entry)> = None;
        for e in registry {
            let name: Vec<char> = e.name.trim().chars().map(fold).collect();
            let end = i + 1 + name.len();
            if name.is_empty() || end > chars.len() {
                continue;
            }
            let fits = chars[i + 1..end].iter().zip(&name).all(|(&(_, c), &n)| fold(c) == n);
            let bounded = end == chars.len() || !word(chars[end].1);
            if !(fits && bounded) {
                continue;
            }
            let better = match best {
                None => true,
                Some((len, prev)) => {
                    name.len() > len
                        || (name.len() == len
                            && matches!(prev.target, MentionTarget::Document(_))
                            && matches!(e.target, MentionTarget::Persona(_)))
                }
            };
            if better {
                best = Some((name.len(), e));
            }
        }
        let (end, target) = match best {
            Some((len, e)) => (i + 1 + len, e.target.clone()),
            None => {
                let run = chars[i + 1..].iter().take_while(|&&(_, c)| word(c) || c == '-').count();
                if run == 0 {
                    i += 1;
                    continue;
                }
                (i + 1 + run, MentionTarget::Unresolved)
            }
        };
        let (s, e) = (byte_at(i), byte_at(end));
        out.push((text[s..e].to_owned(), target, s, e));
        i = end;
    }
    out
}

pub fn run(_rt: &Runtime) -> Outcome {
    let raw = std::fs::read_to_string(data_path("fixtures/mentions.txt")).map_err(|e| e.to_string())?;
    let mut registry = Vec::new();
    let mut corpus = Vec::new();
    let mut in_corpus = false;
    for line in raw.lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "---" {
            in_corpus = true;
        } else if in_corpus {
            corpus.push(line);
        } else if let Some(name) = line.strip_prefix("doc: ") {
            registry.push(Entry { name: name.into(), target: MentionTarget::Document(DocumentId::new()) });
        } else if let Some(name) = line.strip_prefix("persona: ") {
            registry.push(Entry { name: name.into(), target: MentionTarget::Persona(DocumentId::new()) });
        } else {
            return Err(format!("bad registry line {line:?}"));
        }
    }
    ensure!(corpus.len() >= 30, "corpus has only {} lines", corpus.len());
    let trie = NameRegistry::new(registry.iter().map(|e| (e.name.clone(), e.target.clone())));

    let mut mentions = 0;
    let mut unresolved = 0;
    for line in &corpus {
        let want = brute_force(line, &registry);
        let got: Vec<Found> = parse_mentions(line, &trie)
            .into_iter()
            .map(|m| (m.raw, m.target, m.span.start, m.span.end))
            .collect();
        ensure!(got == want, "{line:?}: parser {got:?}, oracle {want:?}");
        mentions += want.len();
        unresolved += want.iter().filter(|m| m.1 == MentionTarget::Unresolved).count();
    }
    ensure!(unresolved > 0, "corpus exercises no unresolved tokens");
    Ok(format!("{} lines, {mentions} mentions ({unresolved} unresolved), full agreement", corpus.len()))
}
