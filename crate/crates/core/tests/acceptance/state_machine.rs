use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use orchid::engine::audit::AuditEvent;
use orchid::engine::{Engine, EngineConfig, JobState, OperationKind, OperationRequest, ResultAction};
use orchid::fixtures::populate_demo;
use orchid::ids::{DocumentId, JobId};
use orchid::prompt::TemplateId;
use orchid::provenance::ProvenanceStore;
use orchid::provider::{ProviderError, ScriptedProvider};
use orchid::store::DocumentStore;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use tokio::runtime::Runtime;

use crate::support::{ensure, Outcome};
use JobState::*;

const SEQUENCES: usize = 10_000;
const PER_ENGINE: usize = 100;

const ALLOWED: [(JobState, JobState); 5] =
    [(Pending, Running), (Pending, Cancelled), (Running, Complete), (Running, Failed), (Running, Cancelled)];

#[derive(Debug, Clone, Copy)]
enum Action {
    Submit,
    Cancel,
    Poll,
    Insert,
    Regenerate,
    Discard,
    Yield,
    Sleep,
}

const ACTIONS: [Action; 8] =
    [Action::Submit, Action::Cancel, Action::Poll, Action::Insert, Action::Regenerate, Action::Discard, Action::Yield, Action::Sleep];

/// Engines differ in latency, timeout and concurrency so that cancels and
/// result actions land in every state.
fn make_engine(variant: usize) -> (Engine, DocumentId) {
    let store = DocumentStore::new();
    let demo = populate_demo(&store).unwrap();
    let mut provider = ScriptedProvider::new().fail_any(
        TemplateId::CritiqueNoPersona,
        ProviderError::RemoteError { status: Some(500), body: "scripted".into() },
    );
    let mut config = EngineConfig { max_concurrent_jobs: 1 + variant % 3, ..EngineConfig::default() };
    match variant % 4 {
        0 => {}
        1 => provider = provider.with_latency(Duration::from_millis(1)),
        2 => {
            provider = provider.with_latency(Duration::from_millis(3));
            config.job_timeout = Duration::from_millis(2);
        }
        _ => provider = provider.with_latency(Duration::from_millis(2)),
    }
    let engine = Engine::new(Arc::new(store), Arc::new(ProvenanceStore::new()), Arc::new(provider), config);
    (engine, demo.working_page)
}

async fn run_sequence(engine: &Engine, page: &DocumentId, rng: &mut StdRng) {
    let mut jobs: Vec<JobId> = Vec::new();
    for _ in 0..rng.random_range(1..=12) {
        let action = *ACTIONS.choose(rng).unwrap();
        let target = jobs.choose(rng).cloned();
        match (action, target) {
            (Action::Submit, _) | (_, None) if !matches!(action, Action::Yield | Action::Sleep) => {
                let kind = *[OperationKind::Summarize, OperationKind::Critique, OperationKind::Ask].choose(rng).unwrap();
                if let Ok(id) = engine.submit_operation(OperationRequest::new(kind, "fuzz", page.clone())) {
                    jobs.push(id);
                }
            }
            (Action::Cancel, Some(j)) => {
                let _ = engine.cancel_job(&j);
            }
            (Action::Poll, Some(j)) => {
                let _ = engine.poll_job(&j);
            }
            (Action::Insert | Action::Regenerate | Action::Discard, Some(j)) => {
                let verb = match action {
                    Action::Insert => ResultAction::Insert,
                    Action::Regenerate => ResultAction::Regenerate,
                    _ => ResultAction::Discard,
                };
                if let Some(block) = engine.poll_job(&j).ok().and_then(|job| job.block) {
                    if let Ok(orchid::engine::ActionOutcome::Regenerated { job, .. }) =
                        engine.apply_result_action(&block, verb)
                    {
                        jobs.push(job);
                    }
                }
            }
            (Action::Sleep, _) => tokio::time::sleep(Duration::from_millis(1)).await,
            _ => tokio::task::yield_now().await,
        }
    }
}

/// Replays the audit log and checks every job's path through the states.
fn audit(engine: &Engine) -> Result<(usize, usize, HashMap<JobState, usize>), String> {
    let mut paths: HashMap<JobId, Vec<(Option<JobState>, JobState)>> = HashMap::new();
    for entry in engine.audit().entries() {
        if let AuditEvent::Transition { job, from, to } = entry.event {
            paths.entry(job).or_default().push((from, to));
        }
    }
    let mut transitions = 0;
    let mut finals: HashMap<JobState, usize> = HashMap::new();
    for job in engine.jobs() {
        let path = paths.get(&job.id).ok_or_else(|| format!("job {} has no audit trail", job.id))?;
        ensure!(path[0] == (None, Pending), "job {} did not start Pending: {:?}", job.id, path[0]);
        let mut current = Pending;
        for &(from, to) in &path[1..] {
            ensure!(from == Some(current), "job {} logged {from:?} while in {current:?}", job.id);
            ensure!(ALLOWED.contains(&(current, to)), "forbidden transition {current:?} -> {to:?} for {}", job.id);
            current = to;
            transitions += 1;
        }
        ensure!(current == job.state, "job {} audit ends {current:?}, job says {:?}", job.id, job.state);
        ensure!(job.state.is_terminal(), "job {} still {:?} after drain", job.id, job.state);
        ensure!((job.state == Complete) == job.result.is_some(), "job {} is {:?} with result {:?}", job.id, job.state, job.result);
        *finals.entry(job.state).or_default() += 1;
    }
    ensure!(paths.len() == engine.jobs().len(), "audit mentions unknown jobs");
    Ok((engine.jobs().len(), transitions, finals))
}

pub fn run(rt: &Runtime) -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut jobs = 0;
    let mut transitions = 0;
    let mut finals: HashMap<JobState, usize> = HashMap::new();
    for batch in 0..SEQUENCES / PER_ENGINE {
        let (j, t, f) = rt.block_on(async {
            let (engine, page) = make_engine(batch);
            for _ in 0..PER_ENGINE {
                run_sequence(&engine, &page, &mut rng).await;
            }
            engine.drain(Duration::from_secs(10)).await;
            audit(&engine)
        })
        .map_err(|e| format!("batch {batch}: {e}"))?;
        jobs += j;
        transitions += t;
        for (k, v) in f {
            *finals.entry(k).or_default() += v;
        }
    }
    for state in [Complete, Failed, Cancelled] {
        ensure!(finals.get(&state).copied().unwrap_or(0) > 0, "no job ended {state:?}; fuzz too narrow");
    }
    let mut ends: Vec<String> = finals.iter().map(|(k, v)| format!("{k:?}={v}")).collect();
    ends.sort();
    Ok(format!(
        "{SEQUENCES} sequences, {jobs} jobs, {transitions} transitions, 0 forbidden; final states {}",
        ends.join(" ")
    ))
}
