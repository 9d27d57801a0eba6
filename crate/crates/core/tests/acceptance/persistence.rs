use std::sync::Arc;

use orchid::archive::{export_workspace, import_workspace};
use orchid::engine::{Engine, ResultAction, TemperatureLevel};
use orchid::fixtures::persona;
use orchid::prompt::TemplateId;
use orchid::provenance::ProvenanceStore;
use orchid::provider::ScriptedProvider;
use orchid::store::{BlockPayload, DocumentKind, DocumentStore, Edit};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use tokio::runtime::Runtime;

use crate::support::{debug_err, engine, ensure, random_request, random_workspace, Outcome};

const WORKSPACES: u64 = 50;
const ODD_TEXT: [&str; 5] = ["plain", "it's \"quoted\"", "line\nbreak\ttab", "ünï 日本語 🎉", "{braces} \\ back"];

async fn grow(engine: &Engine, rng: &mut StdRng, ws: &crate::support::RandomWorkspace) -> Result<(), String> {
    let store = engine.store();
    if rng.random_bool(0.7) {
        let goal = engine.execute_goal(ODD_TEXT.choose(rng).unwrap(), TemperatureLevel::Creative).await.map_err(debug_err)?;
        for task in &goal.tasks {
            if rng.random_bool(0.5) {
                continue;
            }
            if rng.random_bool(0.5) {
                engine.generate_task_persona(&task.id).await.map_err(debug_err)?;
            }
            engine.start_task(&task.id).map_err(debug_err)?;
            if rng.random_bool(0.5) {
                let job = engine.do_task(&task.id, TemperatureLevel::Precise).map_err(debug_err)?;
                engine.wait_job(&job).await.map_err(debug_err)?;
            }
        }
    }
    let mut blocks = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let job = engine.submit_operation(random_request(rng, ws)).map_err(debug_err)?;
        let job = engine.wait_job(&job).await.map_err(debug_err)?;
        blocks.extend(job.block);
    }
    for block in blocks {
        let action = *[ResultAction::Insert, ResultAction::Regenerate, ResultAction::Discard].choose(rng).unwrap();
        engine.apply_result_action(&block, action).map_err(debug_err)?;
    }
    for (id, _) in &ws.context {
        let doc = store.get(id).map_err(debug_err)?;
        let edit = match rng.random_range(0..4) {
            0 => Edit::SetTitle { title: format!("{} v2", doc.title) },
            1 => Edit::AppendBlock { payload: BlockPayload::paragraph(*ODD_TEXT.choose(rng).unwrap()) },
            2 if !doc.blocks.is_empty() => Edit::MoveBlock { block: doc.blocks[0].id.clone(), index: doc.blocks.len() - 1 },
            _ => {
                store.delete_document(id).map_err(debug_err)?;
                continue;
            }
        };
        store.update_document(id, doc.revision, vec![edit]).map_err(debug_err)?;
    }
    store
        .create_document(DocumentKind::Workbook, ODD_TEXT.choose(rng).unwrap(), vec![BlockPayload::paragraph("x")])
        .map_err(debug_err)?;
    Ok(())
}

pub fn run(rt: &Runtime) -> Outcome {
    let mut totals = (0, 0);
    for seed in 0..WORKSPACES {
        let mut rng = StdRng::seed_from_u64(1_000 + seed);
        let ws = random_workspace(&mut rng);
        let todo: Vec<String> = (0..rng.random_range(0..7)).map(|i| format!("Step {i}: {}", ODD_TEXT[i % 5])).collect();
        let provider = ScriptedProvider::new()
            .respond_any(TemplateId::Todo, todo.join("\n"))
            .respond_any(TemplateId::MakePersona, persona(&format!("Expert {seed}")).to_json());
        let result: Result<(usize, usize), String> = rt.block_on(async {
            let store = DocumentStore::from_workspace(ws.store.snapshot()).map_err(debug_err)?;
            let engine = engine(store, Arc::new(provider));
            grow(&engine, &mut rng, &ws).await?;

            let bytes = export_workspace(engine.store(), engine.provenance());
            let archive = import_workspace(&bytes).map_err(debug_err)?;
            let original = engine.store().snapshot();
            let (records, links) = engine.provenance().export();
            ensure!(archive.workspace.goal == original.goal, "goal differs");
            ensure!(
                archive.workspace.documents.keys().eq(original.documents.keys()),
                "document ids differ"
            );
            for (id, doc) in &original.documents {
                ensure!(archive.workspace.documents[id] == *doc, "document {id} differs after import");
            }
            ensure!(archive.provenance.len() == records.len(), "record count differs");
            for (a, b) in archive.provenance.iter().zip(&records) {
                ensure!(a == b, "provenance record {} differs after import", b.id);
            }
            ensure!(archive.links == links, "block links differ");

            let fresh_store = DocumentStore::new();
            let fresh_prov = ProvenanceStore::new();
            archive.install(&fresh_store, &fresh_prov).map_err(debug_err)?;
            ensure!(fresh_store.snapshot() == original, "installed workspace differs");
            ensure!(export_workspace(&fresh_store, &fresh_prov) == bytes, "re-export is not byte-identical");
            Ok((original.documents.len(), records.len()))
        });
        let (docs, records) = result.map_err(|e| format!("seed {seed}: {e}"))?;
        totals.0 += docs;
        totals.1 += records;
    }
    Ok(format!(
        "{WORKSPACES} workspaces ({} documents, {} provenance records) identical after export and import",
        totals.0, totals.1
    ))
}
