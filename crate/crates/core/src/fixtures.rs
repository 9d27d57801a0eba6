//! Demo content mirroring a typical project sidebar: two uploaded context
//! pages, three personas, a working page and a filled-in Me page. Used by
//! the examples and tests.

use crate::ids::DocumentId;
use crate::provider::persona::Persona;
use crate::store::{BlockPayload, DocumentKind, DocumentStore, Edit, StoreError};

#[derive(Debug, Clone)]
pub struct DemoWorkspace {
    pub mental_health_apps: DocumentId,
    pub instructions: DocumentId,
    pub jane: DocumentId,
    pub kofi: DocumentId,
    pub samantha: DocumentId,
    pub working_page: DocumentId,
}

pub fn persona(name: &str) -> Persona {
    Persona {
        name: name.to_owned(),
        biography: format!("{name} is a practitioner with decades of field experience."),
        skills: vec!["user research".into(), "storytelling".into()],
        expertise: vec!["behaviour change".into(), "wellbeing".into()],
        personality_traits: vec!["curious".into(), "candid".into()],
        work_style: "Starts from lived experience, then tests ideas quickly with real people.".into(),
    }
}

pub fn persona_page(store: &DocumentStore, name: &str) -> Result<DocumentId, StoreError> {
    let body = vec![BlockPayload::paragraph(persona(name).to_page_text())];
    Ok(store.create_document(DocumentKind::Persona, name, body)?.id)
}

pub fn populate_demo(store: &DocumentStore) -> Result<DemoWorkspace, StoreError> {
    let mental_health_apps = store
        .create_document(
            DocumentKind::Context,
            "Mental_Health_Apps",
            vec![
                BlockPayload::paragraph("Market research on mental health apps."),
                BlockPayload::paragraph(
                    "Opportunities: journaling prompts, peer support, integration with wearables.",
                ),
            ],
        )?
        .id;
    let instructions = store
        .create_document(
            DocumentKind::Context,
            "Instructions",
            vec![BlockPayload::paragraph("Client brief: propose ways to improve the product.")],
        )?
        .id;
    let jane = persona_page(store, "Dr. Jane Goodall")?;
    let kofi = persona_page(store, "Dr. Kofi Agyeman")?;
    let samantha = persona_page(store, "Samantha Jones")?;
    let working_page = store
        .create_document(
            DocumentKind::Workbook,
            "2. Identify gaps and areas",
            vec![BlockPayload::paragraph("Notes so far, based on @Mental_Health_Apps.")],
        )?
        .id;
    let me = store.me_id().expect("fresh workspaces have a me page");
    let rev = store.get(&me)?.revision;
    store.update_document(
        &me,
        rev,
        vec![Edit::AppendBlock {
            payload: BlockPayload::paragraph(
                "Emotional state: a little stressed about the deadline\n\
                 Preferences: clean layouts, plain language\n\
                 Working style: quick sketches first",
            ),
        }],
    )?;
    Ok(DemoWorkspace { mental_health_apps, instructions, jane, kofi, samantha, working_page })
}
