//! Export a workspace with its provenance to the archive format and load it
//! back.
//!
//! ```text
//! cargo run --example archive [path]
//! ```

use std::sync::Arc;

use orchid::archive::{export_workspace, import_workspace};
use orchid::engine::{Engine, EngineConfig, OperationKind, OperationRequest};
use orchid::fixtures::populate_demo;
use orchid::provenance::ProvenanceStore;
use orchid::provider::ScriptedProvider;
use orchid::store::DocumentStore;

#[tokio::main]
async fn main() {
    let store = Arc::new(DocumentStore::new());
    let demo = populate_demo(&store).expect("demo workspace");
    let engine =
        Engine::new(store.clone(), Arc::new(ProvenanceStore::new()), Arc::new(ScriptedProvider::new()), EngineConfig::default());
    let job = engine.submit_operation(OperationRequest::new(OperationKind::Expand, "", demo.working_page)).unwrap();
    engine.wait_job(&job).await.unwrap();

    let bytes = export_workspace(engine.store(), engine.provenance());
    let text = String::from_utf8(bytes.clone()).unwrap();
    for line in text.lines() {
        let shown: String = line.chars().take(100).collect();
        println!("{shown}{}", if shown.len() < line.len() { " ..." } else { "" });
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &bytes).expect("write archive");
        println!("\nwrote {path}");
    }

    let archive = import_workspace(&bytes).expect("archive decodes");
    let fresh_store = DocumentStore::new();
    let fresh_prov = ProvenanceStore::new();
    archive.install(&fresh_store, &fresh_prov).unwrap();
    assert_eq!(fresh_store.snapshot(), store.snapshot());
    assert_eq!(export_workspace(&fresh_store, &fresh_prov), bytes);
    println!("\nre-imported {} documents and {} provenance records; re-export is identical", fresh_store.snapshot().documents.len(), fresh_prov.len());

    let broken = &bytes[..bytes.len() - 4];
    println!("truncated archive: {}", import_workspace(broken).unwrap_err());
}
