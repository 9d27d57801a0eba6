use serde::{Deserialize, Serialize};

use crate::sections;
use crate::store::Document;

const LABELS: [&str; 3] = ["Emotional state", "Preferences", "Working style"];

/// Personal context read from the Me page.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeProfile {
    pub emotional_state: String,
    pub personal_preferences: String,
    pub working_style: String,
}

impl MeProfile {
    /// Labeled sections `Emotional state:`, `Preferences:`, `Working style:`;
    /// unlabeled text counts as preferences and comes first.
    pub fn from_text(text: &str) -> Self {
        let s = sections::parse(text, &LABELS);
        let prefs: Vec<String> = [Some(s.unlabeled.clone()), s.get(1)]
            .into_iter()
            .flatten()
            .filter(|p| !p.is_empty())
            .collect();
        MeProfile {
            emotional_state: s.get(0).unwrap_or_default(),
            personal_preferences: prefs.join("\n"),
            working_style: s.get(2).unwrap_or_default(),
        }
    }

    pub fn from_page(page: &Document) -> Self {
        Self::from_text(&page.text())
    }

    pub fn to_page_text(&self) -> String {
        format!(
            "Emotional state: {}\nPreferences: {}\nWorking style: {}",
            self.emotional_state, self.personal_preferences, self.working_style
        )
    }
}
