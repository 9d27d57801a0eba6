//! Submit operations as background jobs, keep editing while they run, then
//! insert, regenerate or discard their results.
//!
//! ```text
//! cargo run --example jobs
//! ```

use std::sync::Arc;
use std::time::{Duration, Instant};

use orchid::engine::{Engine, EngineConfig, OperationKind, OperationRequest, ResultAction};
use orchid::fixtures::populate_demo;
use orchid::prompt::TemplateId;
use orchid::provenance::ProvenanceStore;
use orchid::provider::{ProviderError, ScriptedProvider};
use orchid::store::{DocumentKind, DocumentStore};

#[tokio::main]
async fn main() {
    let store = Arc::new(DocumentStore::new());
    let demo = populate_demo(&store).expect("demo workspace");
    let provider = ScriptedProvider::new()
        .with_latency(Duration::from_millis(300))
        .respond_any(TemplateId::AskNoPersona, "Peer support and wearable sync are the main gaps.")
        .fail_any(TemplateId::CritiqueNoPersona, ProviderError::RemoteError { status: Some(503), body: "busy".into() });
    let engine = Engine::new(store.clone(), Arc::new(ProvenanceStore::new()), Arc::new(provider), EngineConfig::default());
    let page = demo.working_page.clone();

    let t = Instant::now();
    let summary = engine.submit_operation(OperationRequest::new(OperationKind::Summarize, "", page.clone())).unwrap();
    let critique = engine.submit_operation(OperationRequest::new(OperationKind::Critique, "", page.clone())).unwrap();
    let reflect = engine.submit_operation(OperationRequest::new(OperationKind::Reflect, "", page.clone())).unwrap();
    println!("3 jobs submitted in {:.2?}", t.elapsed());

    store.create_document(DocumentKind::Workbook, "Edited while jobs run", vec![]).unwrap();
    println!("store write while jobs run: {:.2?} after submit", t.elapsed());

    let cancelled = engine.cancel_job(&reflect).unwrap();
    println!("cancelled reflect: {:?}", cancelled.state);

    for id in [&summary, &critique, &reflect] {
        let job = engine.wait_job(id).await.unwrap();
        println!("{} {:?} result={:?} error={:?}", job.template, job.state, job.result, job.error);
    }

    let block = engine.poll_job(&summary).unwrap().block.unwrap();
    engine.apply_result_action(&block, ResultAction::Insert).unwrap();
    let orchid::engine::ActionOutcome::Regenerated { job, .. } =
        engine.apply_result_action(&block, ResultAction::Regenerate).unwrap()
    else {
        unreachable!()
    };
    engine.wait_job(&job).await.unwrap();
    engine.apply_result_action(&block, ResultAction::Discard).unwrap();

    println!("\npage after insert, regenerate and discard:");
    for b in store.get(&page).unwrap().blocks {
        println!("  {:?} {:?}", b.kind(), b.text().unwrap_or(""));
    }
    println!("\naudit log:");
    for entry in engine.audit().entries() {
        println!("  {}", serde_json::to_string(&entry.event).unwrap());
    }
}
