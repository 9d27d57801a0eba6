//! Template storage and the placeholder grammar.
//!
//! `{name}` is a placeholder, `{{` and `}}` are literal braces, and a lone
//! `}` is also literal (two of the stored templates contain one).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::PromptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    ContextPrompt,
    AskPersona,
    AskNoPersona,
    MasterPersona,
    MasterNoPersona,
    CritiquePersona,
    CritiqueNoPersona,
    MakePersona,
    Todo,
    DoTask,
}

impl TemplateId {
    pub const ALL: [TemplateId; 10] = [
        TemplateId::ContextPrompt,
        TemplateId::AskPersona,
        TemplateId::AskNoPersona,
        TemplateId::MasterPersona,
        TemplateId::MasterNoPersona,
        TemplateId::CritiquePersona,
        TemplateId::CritiqueNoPersona,
        TemplateId::MakePersona,
        TemplateId::Todo,
        TemplateId::DoTask,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ContextPrompt => "ContextPrompt",
            TemplateId::AskPersona => "AskPersona",
            TemplateId::AskNoPersona => "AskNoPersona",
            TemplateId::MasterPersona => "MasterPersona",
            TemplateId::MasterNoPersona => "MasterNoPersona",
            TemplateId::CritiquePersona => "CritiquePersona",
            TemplateId::CritiqueNoPersona => "CritiqueNoPersona",
            TemplateId::MakePersona => "MakePersona",
            TemplateId::Todo => "Todo",
            TemplateId::DoTask => "DoTask",
        }
    }

    /// Stored template text.
    pub fn source(self) -> &'static str {
        match self {
            TemplateId::ContextPrompt => include_str!("../../templates/context_prompt.txt"),
            TemplateId::AskPersona => include_str!("../../templates/ask_prompt.txt"),
            TemplateId::AskNoPersona => include_str!("../../templates/ask_prompt_nopersona.txt"),
            TemplateId::MasterPersona => include_str!("../../templates/master_prompt.txt"),
            TemplateId::MasterNoPersona => include_str!("../../templates/master_prompt_nopersona.txt"),
            TemplateId::CritiquePersona => include_str!("../../templates/critique_prompt.txt"),
            TemplateId::CritiqueNoPersona => include_str!("../../templates/critique_prompt_nopersona.txt"),
            TemplateId::MakePersona => include_str!("../../templates/make_persona_prompt.txt"),
            TemplateId::Todo => include_str!("../../templates/todo_prompt.txt"),
            TemplateId::DoTask => include_str!("../../templates/do_prompt.txt"),
        }
    }

    pub fn template(self) -> &'static Template {
        static TABLE: OnceLock<Vec<Template>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            TemplateId::ALL
                .iter()
                .map(|&id| Template::parse(id.source()).expect("stored templates parse"))
                .collect()
        });
        &table[self as usize]
    }

    /// Whether this template takes a persona.
    pub fn uses_persona(self) -> bool {
        self.template().placeholders().contains(&Placeholder::Persona)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placeholder {
    Context,
    Prompt,
    Task,
    Persona,
    Goal,
    Preferences,
    PersonalPreferences,
    DesignPreferences,
    EmotionalState,
    Objective,
    Exception,
}

impl Placeholder {
    pub const ALL: [Placeholder; 11] = [
        Placeholder::Context,
        Placeholder::Prompt,
        Placeholder::Task,
        Placeholder::Persona,
        Placeholder::Goal,
        Placeholder::Preferences,
        Placeholder::PersonalPreferences,
        Placeholder::DesignPreferences,
        Placeholder::EmotionalState,
        Placeholder::Objective,
        Placeholder::Exception,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::Context => "context",
            Placeholder::Prompt => "prompt",
            Placeholder::Task => "task",
            Placeholder::Persona => "persona",
            Placeholder::Goal => "goal",
            Placeholder::Preferences => "preferences",
            Placeholder::PersonalPreferences => "personal_preferences",
            Placeholder::DesignPreferences => "design_preferences",
            Placeholder::EmotionalState => "emotional_state",
            Placeholder::Objective => "objective",
            Placeholder::Exception => "exception",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == name)
    }

    pub fn is_preference_alias(self) -> bool {
        matches!(
            self,
            Placeholder::Preferences | Placeholder::PersonalPreferences | Placeholder::DesignPreferences
        )
    }
}

/// Placeholder name → fully serialized value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterMap(pub BTreeMap<Placeholder, String>);

impl ParameterMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: Placeholder, value: impl Into<String>) -> &mut Self {
        self.0.insert(key, value.into());
        self
    }

    pub fn with(mut self, key: Placeholder, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: Placeholder) -> Option<&str> {
        self.0.get(&key).map(String::as_str)
    }

    pub fn remove(&mut self, key: Placeholder) -> Option<String> {
        self.0.remove(&key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Placeholder(Placeholder),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, PromptError> {
        let mut segments = Vec::new();
        let mut lit = String::new();
        let mut rest = src;
        while let Some(c) = rest.chars().next() {
            match c {
                '{' if rest.starts_with("{{") => {
                    lit.push('{');
                    rest = &rest[2..];
                }
                '{' => {
                    let name_len = rest[1..].chars().take_while(|&c| is_name_char(c)).count();
                    if name_len == 0 || !rest[1 + name_len..].starts_with('}') {
                        let snippet: String = rest.chars().take(20).collect();
                        return Err(PromptError::MalformedTemplate(snippet));
                    }
                    let name = &rest[1..1 + name_len];
                    let ph = Placeholder::from_name(name)
                        .ok_or_else(|| PromptError::UnknownPlaceholder(name.to_owned()))?;
                    if !lit.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut lit)));
                    }
                    segments.push(Segment::Placeholder(ph));
                    rest = &rest[name_len + 2..];
                }
                '}' if rest.starts_with("}}") => {
                    lit.push('}');
                    rest = &rest[2..];
                }
                _ => {
                    lit.push(c);
                    rest = &rest[c.len_utf8()..];
                }
            }
        }
        if !lit.is_empty() {
            segments.push(Segment::Literal(lit));
        }
        Ok(Template { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Distinct placeholders in order of first appearance.
    pub fn placeholders(&self) -> Vec<Placeholder> {
        let mut out = Vec::new();
        for s in &self.segments {
            if let Segment::Placeholder(p) = s {
                if !out.contains(p) {
                    out.push(*p);
                }
            }
        }
        out
    }

    /// Single-pass substitution; values are never re-scanned.
    pub fn render(&self, params: &ParameterMap) -> Result<String, PromptError> {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Literal(l) => out.push_str(l),
                Segment::Placeholder(p) => {
                    out.push_str(params.get(*p).ok_or(PromptError::MissingRequiredParameter(*p))?)
                }
            }
        }
        Ok(out)
    }

    /// Recovers placeholder values from rendered text by matching the literal
    /// segments in order. Fails if the text does not fit the template or a
    /// repeated placeholder takes two different values.
    pub fn extract(&self, rendered: &str) -> Option<ParameterMap> {
        let mut params = ParameterMap::new();
        let mut pos = 0;
        let mut iter = self.segments.iter().peekable();
        while let Some(seg) = iter.next() {
            match seg {
                Segment::Literal(l) => {
                    if !rendered[pos..].starts_with(l.as_str()) {
                        return None;
                    }
                    pos += l.len();
                }
                Segment::Placeholder(p) => {
                    let end = match iter.peek() {
                        None => rendered.len(),
                        Some(Segment::Literal(next)) => pos + rendered[pos..].find(next.as_str())?,
                        Some(Segment::Placeholder(_)) => return None,
                    };
                    let value = &rendered[pos..end];
                    if let Some(prev) = params.get(*p) {
                        if prev != value {
                            return None;
                        }
                    }
                    params.set(*p, value);
                    pos = end;
                }
            }
        }
        (pos == rendered.len()).then_some(params)
    }
}
