//! Inspect what a generated result was grounded on: the provenance record
//! behind a result block, before and after regeneration.
//!
//! ```text
//! cargo run --example provenance
//! ```

use std::sync::Arc;

use orchid::engine::{ActionOutcome, Engine, EngineConfig, OperationKind, OperationRequest, ResultAction};
use orchid::fixtures::populate_demo;
use orchid::provenance::Lookup;
use orchid::provider::ScriptedProvider;
use orchid::provenance::ProvenanceStore;
use orchid::store::{BlockPayload, DocumentStore, Edit};

#[tokio::main]
async fn main() {
    let store = Arc::new(DocumentStore::new());
    let demo = populate_demo(&store).expect("demo workspace");
    let engine =
        Engine::new(store.clone(), Arc::new(ProvenanceStore::new()), Arc::new(ScriptedProvider::new()), EngineConfig::default());

    let request = OperationRequest::new(OperationKind::Critique, "as @Dr._Kofi_Agyeman, check @Instructions", demo.working_page);
    let job = engine.submit_operation(request).unwrap();
    let job = engine.wait_job(&job).await.unwrap();
    let block = job.block.clone().unwrap();
    println!("{}", engine.provenance().get(&Lookup::Block(block.clone())).unwrap().render_text());

    let rev = store.get(&demo.instructions).unwrap().revision;
    store
        .update_document(&demo.instructions, rev, vec![Edit::AppendBlock { payload: BlockPayload::paragraph("Budget is fixed.") }])
        .unwrap();
    let ActionOutcome::Regenerated { job: second, .. } = engine.apply_result_action(&block, ResultAction::Regenerate).unwrap()
    else {
        unreachable!()
    };
    engine.wait_job(&second).await.unwrap();

    println!("after regenerating, the block points at the new record:\n");
    println!("{}", engine.provenance().get(&Lookup::Block(block)).unwrap().render_text());
    println!("the first job's record is unchanged:\n");
    println!("{}", engine.provenance().by_job(&job.id).unwrap().render_text());
}
