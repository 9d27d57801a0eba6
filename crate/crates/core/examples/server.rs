//! Run the REST service in-process and drive it over HTTP: create pages,
//! submit an operation, poll the job and read its provenance.
//!
//! ```text
//! cargo run --example server
//! ```

use orchid::api::serve;
use orchid::config::Config;
use serde_json::{json, Value};

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config { port: 0, data_dir: dir.path().to_path_buf(), ..Config::default() };
    let service = serve(config).await.expect("service starts");
    let http = reqwest::Client::new();
    let url = |p: &str| service.url(p);
    println!("serving on {}", service.url(""));

    let health: Value = http.get(url("/health")).send().await.unwrap().json().await.unwrap();
    println!("GET /health -> {health}");

    let context: Value = http
        .post(url("/documents"))
        .json(&json!({"kind": "context", "title": "market_research", "blocks": [{"kind": "paragraph", "text": "Opportunities: peer support."}]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let page: Value = http
        .post(url("/documents"))
        .header("X-Request-Id", "create-working-page")
        .json(&json!({"kind": "workbook", "title": "Working page"}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("created {} and {}", context["title"], page["title"]);

    let job: Value = http
        .post(url("/operations"))
        .json(&json!({"kind": "summarize", "prompt": "the opportunities in @market_research", "host_page": page["id"]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("POST /operations -> job {} {}", job["id"], job["state"]);
    let id = job["id"].as_str().unwrap();

    let done = loop {
        let j: Value = http.get(url(&format!("/jobs/{id}"))).send().await.unwrap().json().await.unwrap();
        if j["state"] != "pending" && j["state"] != "running" {
            break j;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
    };
    println!("job {} -> {}", done["state"], done["result"]);

    let record = http.get(url(&format!("/jobs/{id}/provenance?format=text"))).send().await.unwrap().text().await.unwrap();
    println!("\nprovenance:\n{record}");

    let report = service.shutdown().await.unwrap();
    println!("shut down, {} jobs cancelled", report.cancelled);
}
