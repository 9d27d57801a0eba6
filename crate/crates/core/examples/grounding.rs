//! Show which documents and persona an operation is grounded on, and how
//! `@` mentions and page defaults change that.
//!
//! ```text
//! cargo run --example grounding
//! ```

use orchid::engine::{OperationKind, OperationRequest};
use orchid::fixtures::populate_demo;
use orchid::resolver::{resolve_grounding, BundleItem, SelectionRange, UnresolvedPolicy};
use orchid::store::{DocumentStore, Edit};

fn show(store: &DocumentStore, label: &str, request: &OperationRequest) {
    let bundle = resolve_grounding(request, &store.snapshot(), UnresolvedPolicy::Warn).expect("resolves");
    println!("{label}");
    for entry in &bundle.documents {
        let name = match &entry.item {
            BundleItem::Document { title, .. } => title.clone(),
            BundleItem::Selection { range } => format!("selection {:?}", range.text),
        };
        println!("  document {name:<32} {:?}", entry.source);
    }
    match &bundle.persona {
        Some(p) => println!("  persona  {:<32} {:?}", p.persona.name, p.source),
        None => println!("  persona  none"),
    }
    for w in &bundle.warnings {
        println!("  warning  {w}");
    }
}

fn main() {
    let store = DocumentStore::new();
    let demo = populate_demo(&store).expect("demo workspace");
    let page = demo.working_page.clone();

    show(&store, "summarize on the working page:", &OperationRequest::new(OperationKind::Summarize, "", page.clone()));

    let rev = store.get(&page).unwrap().revision;
    store.update_document(&page, rev, vec![Edit::SetDefaultPersona { persona: Some(demo.jane.clone()) }]).unwrap();
    show(
        &store,
        "with a default persona and an extra mention:",
        &OperationRequest::new(OperationKind::FindGaps, "compare with @Instructions", page.clone()),
    );
    show(
        &store,
        "a persona mention overrides the default:",
        &OperationRequest::new(OperationKind::Critique, "as @Samantha_Jones, be blunt", page.clone()),
    );

    let doc = store.get(&page).unwrap();
    let block = &doc.blocks[0];
    let text = block.text().unwrap();
    let selection = SelectionRange {
        document: page,
        block: block.id.clone(),
        start: 0,
        end: 14,
        text: text.chars().take(14).collect(),
    };
    show(&store, "inline prompt on a selection:", &OperationRequest::inline("rewrite this", selection));
}
