//! Labeled-section text format used by Me and Persona pages.
//!
//! A label is a line that starts (after leading whitespace) with one of the
//! known labels followed by `:`, compared case-insensitively. Everything up
//! to the next label line belongs to that section. Text before the first
//! label is returned separately as the unlabeled body.

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Sections {
    pub unlabeled: String,
    /// `(label index, content)` in order of appearance. A label may repeat.
    pub labeled: Vec<(usize, String)>,
}

impl Sections {
    /// All content for `label`, repeated sections joined by newlines.
    pub fn get(&self, label: usize) -> Option<String> {
        let parts: Vec<&str> = self
            .labeled
            .iter()
            .filter(|(l, _)| *l == label)
            .map(|(_, c)| c.as_str())
            .collect();
        if parts.is_empty() {
            None
        } else {
            Some(parts.join("\n"))
        }
    }
}

fn match_label(line: &str, labels: &[&str]) -> Option<(usize, String)> {
    let trimmed = line.trim_start();
    for (i, label) in labels.iter().enumerate() {
        let Some(head) = trimmed.get(..label.len()) else {
            continue;
        };
        if head.eq_ignore_ascii_case(label) && trimmed[label.len()..].starts_with(':') {
            return Some((i, trimmed[label.len() + 1..].to_owned()));
        }
    }
    None
}

pub fn parse(text: &str, labels: &[&str]) -> Sections {
    let mut unlabeled: Vec<&str> = Vec::new();
    let mut labeled: Vec<(usize, Vec<String>)> = Vec::new();
    for line in text.lines() {
        if let Some((label, rest)) = match_label(line, labels) {
            labeled.push((label, vec![rest]));
        } else if let Some((_, body)) = labeled.last_mut() {
            body.push(line.to_owned());
        } else {
            unlabeled.push(line);
        }
    }
    Sections {
        unlabeled: unlabeled.join("\n").trim().to_owned(),
        labeled: labeled
            .into_iter()
            .map(|(l, body)| (l, body.join("\n").trim().to_owned()))
            .collect(),
    }
}
