//! Bundle → parameter values.
//!
//! Documents go into `{context}` as a list of `{'title': ..., 'text': ...}`
//! records, personas as a single record with the six schema keys. Values
//! inside single quotes escape `\` and `'` with a backslash; newlines stay.

use super::template::{ParameterMap, Placeholder};
use crate::engine::request::OperationRequest;
use crate::engine::types::OperationKind;
use crate::provider::persona::{Persona, PERSONA_KEYS};
use crate::resolver::{BundleItem, ContextBundle};

/// Persona text used by the task template when the task has no persona.
pub const GENERIC_EXECUTOR: &str = "an AI task executor";

/// Title given to an inline selection inside `{context}`.
pub const SELECTION_TITLE: &str = "selection";

pub fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        if c == '\\' || c == '\'' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

pub fn record(pairs: &[(&str, &str)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("'{k}': '{}'", escape(v))).collect();
    format!("{{{}}}", body.join(", "))
}

pub fn context_list<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let items: Vec<String> = docs.into_iter().map(|(t, x)| record(&[("title", t), ("text", x)])).collect();
    format!("[{}]", items.join(", "))
}

pub fn persona_record(p: &Persona) -> String {
    let values = p.field_values();
    let pairs: Vec<(&str, &str)> = PERSONA_KEYS.iter().zip(values.iter()).map(|(k, v)| (*k, v.as_str())).collect();
    record(&pairs)
}

/// (title, text) pairs in bundle order.
pub fn bundle_documents(bundle: &ContextBundle) -> Vec<(&str, &str)> {
    bundle
        .documents
        .iter()
        .map(|e| match &e.item {
            BundleItem::Document { title, text, .. } => (title.as_str(), text.as_str()),
            BundleItem::Selection { range } => (SELECTION_TITLE, range.text.as_str()),
        })
        .collect()
}

/// Every value a template could ask for, derived from the bundle and request.
/// `{exception}` is left to the caller since it comes from task state.
pub fn serialize_bundle(bundle: &ContextBundle, request: &OperationRequest) -> ParameterMap {
    let mut params = ParameterMap::new();
    params.set(Placeholder::Context, context_list(bundle_documents(bundle)));
    let prompt = escape(&request.prompt);
    params.set(Placeholder::Prompt, prompt.clone());
    params.set(Placeholder::Task, prompt.clone());

    match &bundle.persona {
        Some(p) => {
            params.set(Placeholder::Persona, persona_record(&p.persona));
        }
        None if request.kind == OperationKind::DoTask => {
            params.set(Placeholder::Persona, GENERIC_EXECUTOR);
        }
        None => {}
    }

    let goal = escape(bundle.goal.as_deref().unwrap_or(""));
    params.set(Placeholder::Goal, goal.clone());
    let objective = if request.kind == OperationKind::ExecuteGoal { prompt } else { goal };
    params.set(Placeholder::Objective, objective);

    let profile = bundle.profile.clone().unwrap_or_default();
    let prefs = escape(&profile.personal_preferences);
    for p in [Placeholder::Preferences, Placeholder::PersonalPreferences, Placeholder::DesignPreferences] {
        params.set(p, prefs.clone());
    }
    params.set(Placeholder::EmotionalState, escape(&profile.emotional_state));
    params
}
