//! Pick a template for an operation, fill it from a grounding bundle and
//! print the meta-prompt a provider would receive.
//!
//! ```text
//! cargo run --example templates [ask|critique|expand|inline_prompt|...]
//! ```

use orchid::engine::{OperationKind, OperationRequest};
use orchid::fixtures::populate_demo;
use orchid::prompt::{escape, render_meta_prompt, select_template, serialize_bundle, Placeholder, TemplateId};
use orchid::resolver::{resolve_grounding, UnresolvedPolicy};
use orchid::store::DocumentStore;

fn main() {
    let kind: OperationKind = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("unknown operation"))
        .unwrap_or(OperationKind::Critique);

    println!("templates:");
    for id in TemplateId::ALL {
        let names: Vec<&str> = id.template().placeholders().iter().map(|p| p.as_str()).collect();
        println!("  {id:<18} {{{}}}", names.join("}, {"));
    }

    let store = DocumentStore::new();
    let demo = populate_demo(&store).expect("demo workspace");
    let request = OperationRequest::new(kind, "what's missing from @Instructions?", demo.working_page);
    let bundle = resolve_grounding(&request, &store.snapshot(), UnresolvedPolicy::Warn).expect("resolves");
    let template = select_template(kind, bundle.persona.is_some());
    let mut params = serialize_bundle(&bundle, &request);
    params.set(Placeholder::Exception, escape(""));
    let prompt = render_meta_prompt(template, &params).expect("renders");

    println!("\n{kind} -> {template} (digest {})\n", &prompt.params_digest[..16]);
    println!("{}", prompt.text);
}
