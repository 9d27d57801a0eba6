//! Decompose a goal into tasks, generate a persona for one, start it and run
//! it on its working page.
//!
//! ```text
//! cargo run --example goal_persona
//! ```

use std::sync::Arc;

use orchid::engine::{Engine, EngineConfig, TemperatureLevel};
use orchid::fixtures::{persona, populate_demo};
use orchid::prompt::TemplateId;
use orchid::provenance::ProvenanceStore;
use orchid::provider::ScriptedProvider;
use orchid::store::DocumentStore;

#[tokio::main]
async fn main() {
    let store = Arc::new(DocumentStore::new());
    populate_demo(&store).expect("demo workspace");
    let plan = "1. Interview ten runners about their sleep\n2. Map the data current trackers collect\n\
                3. Sketch three journaling flows\n4. Test the flows with five users\n\
                5. Write up the findings\n6. Plan a pilot";
    let expert = persona("Dr. Lena Brandt");
    let provider = ScriptedProvider::new()
        .respond_any(TemplateId::Todo, plan)
        .respond_any(TemplateId::MakePersona, format!("Sure, here you go:\n{}", expert.to_json()))
        .respond_any(TemplateId::DoTask, "As Dr. Lena Brandt: here are the interview questions...");
    let engine = Engine::new(store.clone(), Arc::new(ProvenanceStore::new()), Arc::new(provider), EngineConfig::default());

    let goal = engine.execute_goal("improve fitness trackers for sleep", TemperatureLevel::Balanced).await.unwrap();
    println!("goal: {}", goal.goal.objective);
    for w in &goal.warnings {
        println!("warning: {w}");
    }
    for t in &goal.tasks {
        println!("  task {}: {}", t.id, t.description);
    }

    let task = goal.tasks[0].id.clone();
    let made = engine.generate_task_persona(&task).await.unwrap();
    println!("\npersona page {:?}:\n{}", made.page.title, made.page.text());

    let page = engine.start_task(&task).unwrap();
    println!("\nworking page {:?}, default persona {:?}", page.title, page.default_persona);
    let job = engine.do_task(&task, TemperatureLevel::Creative).unwrap();
    let job = engine.wait_job(&job).await.unwrap();
    println!("{} -> {:?}", job.template, job.result.unwrap());
}
