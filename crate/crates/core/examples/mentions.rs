//! Parse `@` mentions against the names in a workspace and list
//! autocomplete candidates.
//!
//! ```text
//! cargo run --example mentions
//! ```

use orchid::fixtures::populate_demo;
use orchid::resolver::{parse_mentions, MentionTarget, NameRegistry};
use orchid::store::DocumentStore;

fn main() {
    let store = DocumentStore::new();
    populate_demo(&store).expect("demo workspace");
    let registry = store.read(NameRegistry::from_workspace);
    let title = |target: &MentionTarget| match target {
        MentionTarget::Document(id) | MentionTarget::Persona(id) => store.get(id).map(|d| d.title).unwrap_or_default(),
        MentionTarget::Unresolved => "(unresolved)".into(),
    };

    for text in [
        "summarize the opportunities section from @mental_health_apps",
        "ask @Dr._Kofi_Agyeman what @instructions leaves out",
        "mail someone@example.com about @nothing-here",
    ] {
        println!("{text}");
        for m in parse_mentions(text, &registry) {
            println!("  {:<24} {:?} -> {}", m.raw, m.target.kind(), title(&m.target));
        }
    }

    println!("\ncandidates for \"@dr\":");
    for entry in registry.candidates("dr") {
        println!("  {}", entry.name);
    }
}
