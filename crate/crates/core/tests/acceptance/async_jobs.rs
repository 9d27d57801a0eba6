use std::sync::Arc;
use std::time::{Duration, Instant};

use orchid::api::serve_with_provider;
use orchid::config::Config;
use orchid::fixtures::populate_demo;
use orchid::ids::JobId;
use orchid::provider::ScriptedProvider;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::runtime::Runtime;

use crate::support::{debug_err, ensure, Outcome};

const STALL: Duration = Duration::from_secs(5);
const SUBMIT_BUDGET: Duration = Duration::from_millis(50);
const CRUD_P99_BUDGET: Duration = Duration::from_millis(100);

async fn timed(req: reqwest::RequestBuilder, want: StatusCode) -> Result<(Duration, Value), String> {
    let t = Instant::now();
    let resp = req.send().await.map_err(|e| e.to_string())?;
    let status = resp.status();
    let body = resp.bytes().await.map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(status == want, "status {status}, expected {want}: {}", String::from_utf8_lossy(&body));
    let value = if body.is_empty() { Value::Null } else { serde_json::from_slice(&body).map_err(|e| e.to_string())? };
    Ok((elapsed, value))
}

pub fn run(rt: &Runtime) -> Outcome {
    rt.block_on(async {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = Config { port: 0, data_dir: dir.path().join("data"), ..Config::default() };
        let provider = Arc::new(ScriptedProvider::new().with_latency(STALL));
        let service = serve_with_provider(config, provider.clone()).await.map_err(debug_err)?;
        let demo = populate_demo(service.engine().store()).map_err(debug_err)?;
        let client = Client::new();
        timed(client.get(service.url("/health")), StatusCode::OK).await?;

        let submit = |i: usize| {
            let req = client.post(service.url("/operations")).json(&json!({
                "kind": "summarize",
                "prompt": format!("question {i}"),
                "host_page": demo.working_page,
            }));
            timed(req, StatusCode::ACCEPTED)
        };
        let stall_start = Instant::now();
        let (a, b, c) = tokio::join!(submit(0), submit(1), submit(2));
        let mut jobs = Vec::new();
        let mut slowest = Duration::ZERO;
        for r in [a, b, c] {
            let (elapsed, job) = r?;
            ensure!(elapsed < SUBMIT_BUDGET, "submission took {elapsed:?}");
            slowest = slowest.max(elapsed);
            let id: JobId = job["id"].as_str().ok_or("job without id")?.parse().map_err(debug_err)?;
            jobs.push(id);
        }

        let mut latencies = Vec::new();
        let mut stalled_ops = 0;
        let all_done = || jobs.iter().all(|j| service.engine().poll_job(j).map(|j| j.state.is_terminal()).unwrap_or(true));
        let mut i = 0;
        while !all_done() {
            ensure!(stall_start.elapsed() < STALL * 3, "jobs did not finish");
            let jobs_running = stall_start.elapsed() < STALL;
            let (t, doc) = timed(
                client.post(service.url("/documents")).json(&json!({"kind": "workbook", "title": format!("scratch {i}")})),
                StatusCode::CREATED,
            )
            .await?;
            latencies.push(t);
            let id = doc["id"].as_str().ok_or("document without id")?.to_owned();
            let path = format!("/documents/{id}");
            let (t, _) = timed(client.get(service.url(&path)), StatusCode::OK).await?;
            latencies.push(t);
            let edit = json!({"expected_revision": 1, "edits": [{"op": "set_title", "title": "renamed"}]});
            let (t, _) = timed(client.patch(service.url(&path)).json(&edit), StatusCode::OK).await?;
            latencies.push(t);
            let (t, _) = timed(client.get(service.url("/documents?kind=workbook")), StatusCode::OK).await?;
            latencies.push(t);
            let (t, _) = timed(client.delete(service.url(&path)), StatusCode::NO_CONTENT).await?;
            latencies.push(t);
            if jobs_running {
                stalled_ops += 5;
            }
            i += 1;
        }
        let covered = stall_start.elapsed();
        ensure!(covered >= STALL, "CRUD loop ended after {covered:?}");
        ensure!(stalled_ops > 0, "no CRUD ran while jobs were stalled");
        for j in &jobs {
            let job = service.engine().poll_job(j).map_err(debug_err)?;
            ensure!(job.result.is_some(), "job {j} ended {:?}", job.state);
        }
        ensure!(provider.calls_finished() == 3, "provider finished {} calls", provider.calls_finished());

        latencies.sort();
        let p99 = latencies[(latencies.len() * 99).div_ceil(100) - 1];
        let max = *latencies.last().unwrap();
        ensure!(p99 < CRUD_P99_BUDGET, "CRUD p99 {p99:?} over {} requests", latencies.len());
        service.shutdown().await.map_err(debug_err)?;
        Ok(format!(
            "3 submissions, slowest {slowest:.2?}; {} CRUD requests over {covered:.1?} ({stalled_ops} during stall), p99 {p99:.2?}, max {max:.2?}",
            latencies.len()
        ))
    })
}
