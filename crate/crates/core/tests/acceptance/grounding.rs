use orchid::engine::{OperationKind, OperationRequest, Task};
use orchid::fixtures::{persona, persona_page, populate_demo};
use orchid::ids::DocumentId;
use orchid::prompt::{select_template, TemplateId};
use orchid::resolver::{resolve_grounding, BundleItem, ContextBundle, GroundingSource, SelectionRange, UnresolvedPolicy};
use orchid::store::{BlockPayload, DocumentKind, DocumentStore, Edit};
use tokio::runtime::Runtime;

use crate::support::{debug_err, ensure, Outcome};
use GroundingSource::*;

type Docs = Vec<(Option<DocumentId>, GroundingSource)>;
type PersonaPick = Option<(DocumentId, GroundingSource)>;

struct Fixture {
    store: DocumentStore,
    market: DocumentId,
    instructions: DocumentId,
    kofi: DocumentId,
    jane: DocumentId,
    host: DocumentId,
}

fn fixture() -> Fixture {
    let store = DocumentStore::new();
    let market = store
        .create_document(DocumentKind::Context, "market_research", vec![BlockPayload::paragraph("Opportunities.")])
        .unwrap()
        .id;
    let instructions = store
        .create_document(DocumentKind::Context, "Instructions", vec![BlockPayload::paragraph("Brief.")])
        .unwrap()
        .id;
    let kofi = persona_page(&store, "Dr. Kofi Agyeman").unwrap();
    let jane = persona_page(&store, "Dr. Jane Goodall").unwrap();
    let host = store
        .create_document(
            DocumentKind::Workbook,
            "Working page",
            vec![
                BlockPayload::paragraph("Selected sentence here."),
                BlockPayload::paragraph("Background lives in @Instructions."),
            ],
        )
        .unwrap()
        .id;
    Fixture { store, market, instructions, kofi, jane, host }
}

/// The precedence rules written out case by case.
fn expected(f: &Fixture, explicit: bool, mention: bool, default: bool, inline: bool) -> (Docs, PersonaPick, TemplateId) {
    let mut docs: Docs = Vec::new();
    if inline {
        docs.push((None, InlineSelection));
        if explicit {
            docs.push((Some(f.market.clone()), ExplicitMention));
        }
    } else {
        if explicit {
            docs.push((Some(f.market.clone()), ExplicitMention));
        }
        docs.push((Some(f.host.clone()), HostPage));
        docs.push((Some(f.instructions.clone()), PageReference));
    }
    let persona = if mention {
        Some((f.kofi.clone(), MentionPersona))
    } else if default && !inline {
        Some((f.jane.clone(), DefaultPersona))
    } else {
        None
    };
    let template = match (inline, persona.is_some()) {
        (true, _) => TemplateId::ContextPrompt,
        (false, true) => TemplateId::AskPersona,
        (false, false) => TemplateId::AskNoPersona,
    };
    (docs, persona, template)
}

fn observed(bundle: &ContextBundle) -> (Docs, PersonaPick) {
    let docs = bundle
        .documents
        .iter()
        .map(|e| match &e.item {
            BundleItem::Document { id, .. } => (Some(id.clone()), e.source),
            BundleItem::Selection { .. } => (None, e.source),
        })
        .collect();
    let persona = bundle.persona.as_ref().map(|p| (p.id.clone(), p.source));
    (docs, persona)
}

fn truth_table() -> Result<usize, String> {
    let f = fixture();
    let mut cases = 0;
    for bits in 0..16u8 {
        let (explicit, mention, default, inline) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0);
        let rev = f.store.get(&f.host).unwrap().revision;
        f.store
            .update_document(&f.host, rev, vec![Edit::SetDefaultPersona { persona: default.then(|| f.jane.clone()) }])
            .map_err(debug_err)?;
        let mut prompt = String::from("help me");
        if explicit {
            prompt.push_str(" using @market_research");
        }
        if mention {
            prompt.push_str(" as @Dr._Kofi_Agyeman");
        }
        let request = if inline {
            let page = f.store.get(&f.host).unwrap();
            let sel = SelectionRange {
                document: f.host.clone(),
                block: page.blocks[0].id.clone(),
                start: 0,
                end: 8,
                text: "Selected".into(),
            };
            OperationRequest::inline(prompt, sel)
        } else {
            OperationRequest::new(OperationKind::Ask, prompt, f.host.clone())
        };
        let bundle = resolve_grounding(&request, &f.store.snapshot(), UnresolvedPolicy::Reject).map_err(debug_err)?;
        let (docs, persona) = observed(&bundle);
        let template = select_template(request.kind, persona.is_some());
        let (want_docs, want_persona, want_template) = expected(&f, explicit, mention, default, inline);
        let case = format!("explicit={explicit} persona_mention={mention} default={default} inline={inline}");
        ensure!(docs == want_docs, "{case}: documents {docs:?}, expected {want_docs:?}");
        ensure!(persona == want_persona, "{case}: persona {persona:?}, expected {want_persona:?}");
        ensure!(template == want_template, "{case}: template {template}, expected {want_template}");
        cases += 1;
    }
    Ok(cases)
}

/// A started task's working page inherits the task persona as its default.
fn task_page_default_persona() -> Result<(), String> {
    let store = DocumentStore::new();
    populate_demo(&store).map_err(debug_err)?;
    let goal = store.set_goal("improve fitness trackers", vec![Task::open("Interview runners")]).map_err(debug_err)?;
    let task = goal.tasks[0].id.clone();
    let page = store.attach_task_persona(&task, &persona("Dr. Mia Okafor")).map_err(debug_err)?;
    let working = store.start_task(&task).map_err(debug_err)?;
    ensure!(working.default_persona.as_ref() == Some(&page.id), "working page lacks the task persona");
    let req = OperationRequest::new(OperationKind::Summarize, "", working.id.clone());
    let bundle = resolve_grounding(&req, &store.snapshot(), UnresolvedPolicy::Warn).map_err(debug_err)?;
    let (docs, persona) = observed(&bundle);
    ensure!(persona == Some((page.id.clone(), DefaultPersona)), "task page persona: {persona:?}");
    ensure!(docs == vec![(Some(working.id.clone()), HostPage)], "task page documents: {docs:?}");
    Ok(())
}

/// Inline prompts ignore the host page, its references and its default persona.
fn inline_isolation() -> Result<(), String> {
    let store = DocumentStore::new();
    let demo = populate_demo(&store).map_err(debug_err)?;
    let rev = store.get(&demo.working_page).unwrap().revision;
    store
        .update_document(&demo.working_page, rev, vec![Edit::SetDefaultPersona { persona: Some(demo.jane.clone()) }])
        .map_err(debug_err)?;
    let page = store.get(&demo.working_page).unwrap();
    let text = page.blocks[0].text().unwrap().to_owned();
    let sel = SelectionRange {
        document: page.id.clone(),
        block: page.blocks[0].id.clone(),
        start: 0,
        end: text.chars().count(),
        text,
    };
    let req = OperationRequest::inline("make this more concise", sel);
    let bundle = resolve_grounding(&req, &store.snapshot(), UnresolvedPolicy::Warn).map_err(debug_err)?;
    let (docs, persona) = observed(&bundle);
    ensure!(docs == vec![(None, InlineSelection)], "inline documents: {docs:?}");
    ensure!(persona.is_none(), "inline persona: {persona:?}");
    Ok(())
}

/// A prompt mention augments what the page already references.
fn mention_augments_page_references() -> Result<(), String> {
    let store = DocumentStore::new();
    let demo = populate_demo(&store).map_err(debug_err)?;
    let req = OperationRequest::new(OperationKind::FindGaps, "check against @Instructions", demo.working_page.clone());
    let bundle = resolve_grounding(&req, &store.snapshot(), UnresolvedPolicy::Reject).map_err(debug_err)?;
    let (docs, _) = observed(&bundle);
    let want = vec![
        (Some(demo.instructions.clone()), ExplicitMention),
        (Some(demo.working_page.clone()), HostPage),
        (Some(demo.mental_health_apps.clone()), PageReference),
    ];
    ensure!(docs == want, "augmentation: {docs:?}, expected {want:?}");
    Ok(())
}

pub fn run(_rt: &Runtime) -> Outcome {
    let cases = truth_table()?;
    task_page_default_persona()?;
    inline_isolation()?;
    mention_augments_page_references()?;
    Ok(format!("{cases} cross-product cases plus task-page persona, inline isolation, mention augmentation"))
}
