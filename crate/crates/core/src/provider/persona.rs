//! The persona record and its two text forms: the JSON object a provider
//! returns when asked to make a persona, and the labeled-section body stored
//! on a Persona page.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::sections;

/// Field keys in schema order.
pub const PERSONA_KEYS: [&str; 6] = [
    "name",
    "biography",
    "skills",
    "expertise",
    "personality_traits",
    "work_style",
];

/// Page labels, index-aligned with [`PERSONA_KEYS`].
const PAGE_LABELS: [&str; 6] = [
    "Name",
    "Biography",
    "Skills",
    "Expertise",
    "Personality traits",
    "Work style",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub biography: String,
    pub skills: Vec<String>,
    pub expertise: Vec<String>,
    pub personality_traits: Vec<String>,
    pub work_style: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MalformedPersona {
    #[error("no brace-delimited object found in response")]
    NoObject,
    #[error("persona object is not valid JSON: {0}")]
    Json(String),
    #[error("persona is missing field '{0}'")]
    MissingField(&'static str),
    #[error("persona field '{0}' is empty")]
    EmptyField(&'static str),
    #[error("persona field '{0}' has the wrong type")]
    WrongType(&'static str),
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn is_list_field(key: &str) -> bool {
    matches!(key, "skills" | "expertise" | "personality_traits")
}

impl Persona {
    fn from_fields(mut get: impl FnMut(usize) -> Result<String, MalformedPersona>) -> Result<Self, MalformedPersona> {
        let mut text = Vec::with_capacity(6);
        for (i, key) in PERSONA_KEYS.iter().enumerate() {
            let value = get(i)?;
            let value = value.trim();
            if value.is_empty() || (is_list_field(key) && split_list(value).is_empty()) {
                return Err(MalformedPersona::EmptyField(key));
            }
            text.push(value.to_owned());
        }
        let mut it = text.into_iter();
        let mut next = || it.next().unwrap_or_default();
        Ok(Persona {
            name: next(),
            biography: next(),
            skills: split_list(&next()),
            expertise: split_list(&next()),
            personality_traits: split_list(&next()),
            work_style: next(),
        })
    }

    /// Parses the body of a Persona page.
    pub fn from_page_text(text: &str) -> Result<Self, MalformedPersona> {
        let sections = sections::parse(text, &PAGE_LABELS);
        Self::from_fields(|i| sections.get(i).ok_or(MalformedPersona::MissingField(PERSONA_KEYS[i])))
    }

    /// Renders the labeled-section body stored on a Persona page.
    pub fn to_page_text(&self) -> String {
        let values = self.field_values();
        PAGE_LABELS
            .iter()
            .zip(values.iter())
            .map(|(label, value)| format!("{label}: {value}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// The six fields as flat text, list fields comma-joined.
    pub fn field_values(&self) -> [String; 6] {
        [
            self.name.clone(),
            self.biography.clone(),
            self.skills.join(", "),
            self.expertise.join(", "),
            self.personality_traits.join(", "),
            self.work_style.clone(),
        ]
    }

    /// JSON object in schema key order, list fields as comma-separated text.
    pub fn to_json(&self) -> String {
        let values = self.field_values();
        let body: Vec<String> = PERSONA_KEYS
            .iter()
            .zip(values.iter())
            .map(|(k, v)| format!("\"{k}\": {}", Value::String(v.clone())))
            .collect();
        format!("{{{}}}", body.join(", "))
    }
}

/// Byte range of the first balanced `{...}` block, skipping braces inside
/// double-quoted strings.
pub fn first_brace_block(text: &str) -> Option<std::ops::Range<usize>> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (off, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start..start + off + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Drops commas that directly precede a closing brace or bracket, outside
/// strings. The schema shown to the model ends with such a comma and models
/// tend to copy it.
fn strip_trailing_commas(json: &str) -> String {
    let chars: Vec<char> = json.chars().collect();
    let mut out = String::with_capacity(json.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            out.push(c);
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Extracts the persona object from a provider response.
pub fn parse_persona_response(text: &str) -> Result<Persona, MalformedPersona> {
    let range = first_brace_block(text).ok_or(MalformedPersona::NoObject)?;
    let cleaned = strip_trailing_commas(&text[range]);
    let object: Map<String, Value> =
        serde_json::from_str(&cleaned).map_err(|e| MalformedPersona::Json(e.to_string()))?;
    Persona::from_fields(|i| {
        let key = PERSONA_KEYS[i];
        match object.get(key) {
            None | Some(Value::Null) => Err(MalformedPersona::MissingField(key)),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Array(items)) if is_list_field(key) => items
                .iter()
                .map(|v| v.as_str().map(str::to_owned).ok_or(MalformedPersona::WrongType(key)))
                .collect::<Result<Vec<_>, _>>()
                .map(|items| items.join(", ")),
            Some(_) => Err(MalformedPersona::WrongType(key)),
        }
    })
}
