use std::sync::Arc;

use orchid::engine::{Engine, EngineError, TemperatureLevel};
use orchid::fixtures::populate_demo;
use orchid::ids::TaskId;
use orchid::prompt::TemplateId;
use orchid::provider::scripted::ANY_DIGEST;
use orchid::provider::{MalformedPersona, Persona, ScriptedProvider, ScriptedResponse};
use orchid::store::DocumentStore;
use serde_json::json;
use tokio::runtime::Runtime;

use crate::support::{debug_err, engine, ensure, Outcome};

fn rig(provider: ScriptedProvider) -> (Engine, Arc<ScriptedProvider>) {
    let store = DocumentStore::new();
    populate_demo(&store).unwrap();
    let provider = Arc::new(provider);
    (engine(store, provider.clone()), provider)
}

fn lines(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("Interview runner group {i} about sleep tracking")).collect()
}

/// (scripted response, expected task descriptions, expect a warning)
fn plans() -> Vec<(String, Vec<String>, bool)> {
    vec![
        (String::new(), vec![], true),
        (lines(5).join("\n"), lines(5), false),
        (lines(7).join("\n"), lines(5), true),
        (
            lines(7).iter().enumerate().map(|(i, l)| format!("{}. {l}\n", i + 1)).collect(),
            lines(5),
            true,
        ),
        ("\n\n   \n\t\n".into(), vec![], true),
        (
            lines(6).iter().map(|l| format!("\n  - {l}  \n")).collect(),
            lines(5),
            true,
        ),
    ]
}

fn persona_json(name: &str, drop: Option<&str>) -> String {
    let mut v = json!({
        "name": name,
        "biography": format!("{name} ran a sports science lab for twenty years."),
        "skills": "field interviews, data analysis",
        "expertise": "sleep science, wearables",
        "personality_traits": "patient, direct",
        "work_style": "Tests every idea with athletes before writing it down.",
    });
    if let Some(key) = drop {
        v.as_object_mut().unwrap().remove(key);
    }
    format!("Here is the persona you asked for:\n{v}\nLet me know if you need changes.")
}

fn expected_persona(name: &str) -> Persona {
    Persona {
        name: name.into(),
        biography: format!("{name} ran a sports science lab for twenty years."),
        skills: vec!["field interviews".into(), "data analysis".into()],
        expertise: vec!["sleep science".into(), "wearables".into()],
        personality_traits: vec!["patient".into(), "direct".into()],
        work_style: "Tests every idea with athletes before writing it down.".into(),
    }
}

fn escaped(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\'', "\\'")
}

async fn first_task(engine: &Engine) -> Result<TaskId, String> {
    let goal = engine.execute_goal("improve fitness trackers", TemperatureLevel::Balanced).await.map_err(debug_err)?;
    Ok(goal.tasks.first().ok_or("no task created")?.id.clone())
}

async fn decomposition() -> Result<usize, String> {
    let mut cases = 0;
    for (response, want, warns) in plans() {
        let (engine, _) = rig(ScriptedProvider::new().respond_any(TemplateId::Todo, response.clone()));
        let out = engine.execute_goal("improve fitness trackers", TemperatureLevel::Balanced).await.map_err(debug_err)?;
        let got: Vec<String> = out.tasks.iter().map(|t| t.description.clone()).collect();
        ensure!(got.len() <= 5, "{response:?}: {} tasks", got.len());
        ensure!(got == want, "{response:?}: tasks {got:?}, expected {want:?}");
        ensure!(out.warnings.is_empty() != warns, "{response:?}: warnings {:?}", out.warnings);
        let stored = engine.store().read(|ws| ws.goal.clone()).ok_or("goal not stored")?;
        ensure!(stored.tasks.len() == got.len(), "stored goal has {} tasks", stored.tasks.len());
        cases += 1;
    }
    Ok(cases)
}

async fn persona_round_trip_and_exceptions() -> Result<(), String> {
    let names = ["Dr. Lena Brandt", "Kwame O'Brien", "Dr. Lena Brandt II"];
    let provider = ScriptedProvider::new().respond_any(TemplateId::Todo, "Interview runners").respond_seq(
        TemplateId::MakePersona,
        ANY_DIGEST,
        names.iter().map(|n| ScriptedResponse::Text(persona_json(n, None))).collect(),
    );
    let (engine, provider) = rig(provider);
    let task = first_task(&engine).await?;
    let mut history: Vec<&str> = Vec::new();
    for name in names {
        let out = engine.generate_task_persona(&task).await.map_err(debug_err)?;
        ensure!(out.jobs.len() == 1, "well-formed persona needed {} attempts", out.jobs.len());
        let stored = out.page.persona().ok_or("persona page does not parse")?;
        ensure!(stored == expected_persona(name), "persona page {stored:?}");
        ensure!(out.task.persona.as_ref() == Some(&out.page.id), "task does not point at the persona page");
        let prompt = provider
            .prompts()
            .into_iter()
            .rfind(|p| p.template == TemplateId::MakePersona)
            .ok_or("no persona prompt")?;
        let exceptions = format!("'exceptions': '{}'", escaped(&history.join(", ")));
        ensure!(prompt.text.contains(&exceptions), "prompt lacks {exceptions}");
        ensure!(prompt.text.contains("'task': 'Interview runners'"), "prompt lacks the task");
        history.push(name);
    }
    Ok(())
}

async fn missing_field_is_retried_once() -> Result<(), String> {
    let provider = ScriptedProvider::new()
        .respond_any(TemplateId::Todo, "Interview runners")
        .respond_any(TemplateId::MakePersona, persona_json("Dr. Lena Brandt", Some("work_style")));
    let (engine, provider) = rig(provider);
    let task = first_task(&engine).await?;
    let err = engine.generate_task_persona(&task).await;
    ensure!(
        err == Err(EngineError::MalformedPersona(MalformedPersona::MissingField("work_style"))),
        "got {err:?}"
    );
    let prompts: Vec<String> =
        provider.prompts().into_iter().filter(|p| p.template == TemplateId::MakePersona).map(|p| p.text).collect();
    ensure!(prompts.len() == 2, "{} persona calls, expected 2", prompts.len());
    ensure!(prompts[0] == prompts[1], "retry changed the prompt");
    let task = engine.store().task(&task).map_err(debug_err)?;
    ensure!(task.persona.is_none() && task.persona_history.is_empty(), "task changed after rejection");
    Ok(())
}

pub fn run(rt: &Runtime) -> Outcome {
    rt.block_on(async {
        let cases = decomposition().await?;
        persona_round_trip_and_exceptions().await?;
        missing_field_is_retried_once().await?;
        Ok(format!(
            "{cases} decompositions capped at 5; persona round-trip with exceptions over 3 regenerations; missing field rejected after 2 calls"
        ))
    })
}
