//! REST service over the engine.
//!
//! All bodies are JSON except the workspace archive, which travels as
//! `text/plain`. Mutating requests (POST, PATCH, DELETE) may carry an
//! `X-Request-Id` header; a retry with the same id and the same request gets
//! the stored response back instead of running again. After every
//! successful mutation the workspace is written to
//! `<data_dir>/workspace.orchid`.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::archive::{Archive, ArchiveError};
use crate::config::{Config, InvalidConfig};
use crate::engine::audit::AuditLog;
use crate::engine::{Engine, EngineError, JobState, OperationRequest, ResultAction, TemperatureLevel};
use crate::ids::{BlockId, DocumentId, JobId, TaskId};
use crate::provenance::{Lookup, ProvenanceError, ProvenanceStore};
use crate::provider::{CompletionProvider, ProviderError, ProviderKind, RemoteHttpProvider, ScriptedProvider};
use crate::resolver::ResolveError;
use crate::store::{BlockPayload, DocumentFilter, DocumentKind, DocumentStore, Edit, StoreError};

pub const REQUEST_ID_HEADER: &str = "x-request-id";
pub const REPLAY_HEADER: &str = "idempotent-replay";
pub const ARCHIVE_FILE: &str = "workspace.orchid";
pub const AUDIT_FILE: &str = "audit.jsonl";
const IDEMPOTENCY_CAPACITY: usize = 10_000;
const MAX_BODY: usize = 64 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        use StoreError::*;
        let (status, code) = match &e {
            NotFound(_) | BlockNotFound(_) | TaskNotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            DuplicateSingleton(_) => (StatusCode::CONFLICT, "duplicate_singleton"),
            RevisionConflict { .. } => (StatusCode::CONFLICT, "revision_conflict"),
            ProtectedDocument(_) => (StatusCode::CONFLICT, "protected_document"),
            AlreadyStarted(_) => (StatusCode::CONFLICT, "already_started"),
            EmptyTitle => (StatusCode::UNPROCESSABLE_ENTITY, "empty_title"),
            InvalidBlockIndex { .. } | InvalidDefaultPersona(_) | InvalidPersonaBody(_) | ManagedBlock(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_edit")
            }
            Invariant(_) => (StatusCode::INTERNAL_SERVER_ERROR, "invariant"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ResolveError> for ApiError {
    fn from(e: ResolveError) -> Self {
        let (status, code) = match &e {
            ResolveError::UnknownHostPage(_) => (StatusCode::NOT_FOUND, "unknown_host_page"),
            ResolveError::UnresolvedMention(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unresolved_mention"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ProvenanceError> for ApiError {
    fn from(e: ProvenanceError) -> Self {
        let status = match e {
            ProvenanceError::NotFound(_) => StatusCode::NOT_FOUND,
            ProvenanceError::DuplicateRecord(_) => StatusCode::CONFLICT,
        };
        ApiError::new(status, "provenance", e.to_string())
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        let status = match e {
            ProviderError::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
            ProviderError::Cancelled => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::BAD_GATEWAY,
        };
        ApiError::new(status, "provider", e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        use EngineError::*;
        match e {
            Store(e) => e.into(),
            Resolve(e) => e.into(),
            Provenance(e) => e.into(),
            Provider(e) => e.into(),
            Validation(m) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", m),
            EmptyObjective => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_objective", e.to_string()),
            Prompt(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "prompt", e.to_string()),
            JobNotFound(_) | BlockNotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            NotAResultBlock(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_a_result_block", e.to_string()),
            InvalidState { .. } => ApiError::new(StatusCode::CONFLICT, "invalid_state", e.to_string()),
            NotStarted(_) => ApiError::new(StatusCode::CONFLICT, "not_started", e.to_string()),
            MalformedPersona(_) => ApiError::new(StatusCode::BAD_GATEWAY, "malformed_persona", e.to_string()),
        }
    }
}

impl From<ArchiveError> for ApiError {
    fn from(e: ArchiveError) -> Self {
        let code = match e {
            ArchiveError::MalformedArchive { .. } => "malformed_archive",
            ArchiveError::VersionMismatch { .. } => "version_mismatch",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_id<T: FromStr>(raw: &str, what: &str) -> ApiResult<T> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("{raw:?} is not a valid {what} id")))
}

enum Cached {
    InFlight { fingerprint: String },
    Done { fingerprint: String, status: StatusCode, content_type: Option<HeaderValue>, body: Bytes },
}

#[derive(Default)]
struct IdempotencyCache {
    entries: HashMap<String, Cached>,
    order: VecDeque<String>,
}

impl IdempotencyCache {
    fn insert(&mut self, key: String, value: Cached) {
        if self.entries.insert(key.clone(), value).is_none() {
            self.order.push_back(key);
        }
        while self.order.len() > IDEMPOTENCY_CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }

    fn remove(&mut self, key: &str) {
        self.entries.remove(key);
        self.order.retain(|k| k != key);
    }
}

struct Shared {
    engine: Engine,
    provider_kind: ProviderKind,
    archive_path: Option<PathBuf>,
    persist_lock: Mutex<()>,
    idempotency: Mutex<IdempotencyCache>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    /// `archive_path`: where to write the workspace after each mutation.
    pub fn new(engine: Engine, provider_kind: ProviderKind, archive_path: Option<PathBuf>) -> Self {
        AppState(Arc::new(Shared {
            engine,
            provider_kind,
            archive_path,
            persist_lock: Mutex::new(()),
            idempotency: Mutex::default(),
        }))
    }

    pub fn engine(&self) -> &Engine {
        &self.0.engine
    }

    pub fn persist(&self) -> std::io::Result<()> {
        let Some(path) = &self.0.archive_path else { return Ok(()) };
        let _guard = self.0.persist_lock.lock();
        let e = &self.0.engine;
        write_atomically(path, Archive::capture(e.store(), e.provenance()).encode().as_bytes())
    }
}

fn write_atomically(path: &FsPath, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

fn is_mutating(m: &Method) -> bool {
    matches!(*m, Method::POST | Method::PATCH | Method::PUT | Method::DELETE)
}

async fn idempotency(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if !is_mutating(req.method()) {
        return next.run(req).await;
    }
    let key = req.headers().get(REQUEST_ID_HEADER).and_then(|v| v.to_str().ok()).map(str::to_owned);
    let Some(key) = key else {
        let resp = next.run(req).await;
        return after_mutation(&state, resp);
    };

    let (parts, body) = req.into_parts();
    let body = match axum::body::to_bytes(body, MAX_BODY).await {
        Ok(b) => b,
        Err(e) => return ApiError::bad_request(e.to_string()).into_response(),
    };
    let fingerprint = {
        let mut h = Sha256::new();
        h.update(parts.method.as_str());
        h.update([0]);
        h.update(parts.uri.path());
        h.update([0]);
        h.update(&body);
        hex::encode(h.finalize())
    };
    {
        let mut cache = state.0.idempotency.lock();
        match cache.entries.get(&key) {
            Some(Cached::Done { fingerprint: f, status, content_type, body }) if *f == fingerprint => {
                let mut resp = Response::new(Body::from(body.clone()));
                *resp.status_mut() = *status;
                if let Some(ct) = content_type {
                    resp.headers_mut().insert(header::CONTENT_TYPE, ct.clone());
                }
                resp.headers_mut().insert(REPLAY_HEADER, HeaderValue::from_static("true"));
                return resp;
            }
            Some(Cached::InFlight { fingerprint: f }) if *f == fingerprint => {
                return ApiError::new(StatusCode::CONFLICT, "request_in_progress", "request with this id is still running")
                    .into_response();
            }
            Some(_) => {
                return ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "request_id_reused",
                    "request id was already used for a different request",
                )
                .into_response();
            }
            None => cache.insert(key.clone(), Cached::InFlight { fingerprint: fingerprint.clone() }),
        }
    }

    let resp = next.run(Request::from_parts(parts, Body::from(body))).await;
    let resp = after_mutation(&state, resp);
    let (parts, body) = resp.into_parts();
    let bytes = axum::body::to_bytes(body, MAX_BODY).await.unwrap_or_default();
    {
        let mut cache = state.0.idempotency.lock();
        if parts.status.is_server_error() {
            cache.remove(&key);
        } else {
            cache.insert(
                key,
                Cached::Done {
                    fingerprint,
                    status: parts.status,
                    content_type: parts.headers.get(header::CONTENT_TYPE).cloned(),
                    body: bytes.clone(),
                },
            );
        }
    }
    Response::from_parts(parts, Body::from(bytes))
}

fn after_mutation(state: &AppState, resp: Response) -> Response {
    if resp.status().is_success() {
        if let Err(e) = state.persist() {
            tracing::error!(error = %e, "persisting workspace failed");
            return ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist", e.to_string()).into_response();
        }
    }
    resp
}

async fn health(State(s): State<AppState>) -> Json<serde_json::Value> {
    let provider = match s.0.provider_kind {
        ProviderKind::Scripted => "scripted",
        ProviderKind::RemoteHttp => "remote_http",
    };
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION"), "provider": provider }))
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    kind: Option<DocumentKind>,
    prefix: Option<String>,
}

async fn list_documents(State(s): State<AppState>, Query(q): Query<ListQuery>) -> impl IntoResponse {
    let filter = DocumentFilter { kind: q.kind, title_prefix: q.prefix };
    Json(s.engine().store().query_documents(&filter))
}

#[derive(Debug, Deserialize)]
struct CreateDocument {
    kind: DocumentKind,
    title: String,
    #[serde(default)]
    blocks: Vec<BlockPayload>,
}

async fn create_document(State(s): State<AppState>, Json(body): Json<CreateDocument>) -> ApiResult<impl IntoResponse> {
    let doc = s.engine().store().create_document(body.kind, &body.title, body.blocks)?;
    Ok((StatusCode::CREATED, Json(doc)))
}

async fn get_document(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: DocumentId = parse_id(&id, "document")?;
    Ok(Json(s.engine().store().get(&id)?))
}

#[derive(Debug, Deserialize)]
struct UpdateDocument {
    expected_revision: u64,
    edits: Vec<Edit>,
}

async fn update_document(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<UpdateDocument>,
) -> ApiResult<impl IntoResponse> {
    let id: DocumentId = parse_id(&id, "document")?;
    Ok(Json(s.engine().store().update_document(&id, body.expected_revision, body.edits)?))
}

async fn delete_document(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id: DocumentId = parse_id(&id, "document")?;
    s.engine().store().delete_document(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn export_workspace(State(s): State<AppState>) -> impl IntoResponse {
    let e = s.engine();
    let text = Archive::capture(e.store(), e.provenance()).encode();
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text)
}

async fn import_workspace(State(s): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let archive = Archive::decode(&body)?;
    let counts = json!({
        "documents": archive.workspace.documents.len(),
        "provenance": archive.provenance.len(),
    });
    archive.install(s.engine().store(), s.engine().provenance())?;
    Ok(Json(counts))
}

async fn submit_operation(State(s): State<AppState>, Json(req): Json<OperationRequest>) -> ApiResult<impl IntoResponse> {
    let id = s.engine().submit_operation(req)?;
    Ok((StatusCode::ACCEPTED, Json(s.engine().poll_job(&id)?)))
}

async fn get_job(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: JobId = parse_id(&id, "job")?;
    Ok(Json(s.engine().poll_job(&id)?))
}

async fn cancel_job(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: JobId = parse_id(&id, "job")?;
    Ok(Json(s.engine().cancel_job(&id)?))
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

fn provenance_response(s: &AppState, lookup: Lookup, q: FormatQuery) -> ApiResult<Response> {
    let rec = s.engine().provenance().get(&lookup)?;
    Ok(match q.format.as_deref() {
        Some("text") => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], rec.render_text()).into_response(),
        None | Some("json") => Json(&*rec).into_response(),
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    })
}

async fn job_provenance(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    provenance_response(&s, Lookup::Job(parse_id(&id, "job")?), q)
}

async fn block_provenance(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    provenance_response(&s, Lookup::Block(parse_id::<BlockId>(&id, "block")?), q)
}

#[derive(Debug, Deserialize)]
struct ActionBody {
    action: ResultAction,
}

async fn block_action(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ActionBody>,
) -> ApiResult<impl IntoResponse> {
    let id: BlockId = parse_id(&id, "block")?;
    Ok(Json(s.engine().apply_result_action(&id, body.action)?))
}

async fn resolve(State(s): State<AppState>, Json(req): Json<OperationRequest>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.engine().preview(&req)?))
}

#[derive(Debug, Deserialize)]
struct GoalBody {
    objective: String,
    #[serde(default)]
    temperature: TemperatureLevel,
}

async fn execute_goal(State(s): State<AppState>, Json(body): Json<GoalBody>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.engine().execute_goal(&body.objective, body.temperature).await?))
}

async fn get_goal(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.engine().store().read(|ws| ws.goal.clone()))
}

async fn get_task(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: TaskId = parse_id(&id, "task")?;
    Ok(Json(s.engine().store().task(&id)?))
}

async fn start_task(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: TaskId = parse_id(&id, "task")?;
    Ok((StatusCode::CREATED, Json(s.engine().start_task(&id)?)))
}

async fn task_persona(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id: TaskId = parse_id(&id, "task")?;
    Ok(Json(s.engine().generate_task_persona(&id).await?))
}

#[derive(Debug, Default, Deserialize)]
struct DoBody {
    #[serde(default)]
    temperature: TemperatureLevel,
}

async fn do_task(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<DoBody>>,
) -> ApiResult<impl IntoResponse> {
    let id: TaskId = parse_id(&id, "task")?;
    let temperature = body.map(|b| b.0.temperature).unwrap_or_default();
    let job = s.engine().do_task(&id, temperature)?;
    Ok((StatusCode::ACCEPTED, Json(s.engine().poll_job(&job)?)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/documents", get(list_documents).post(create_document))
        .route("/documents/{id}", get(get_document).patch(update_document).delete(delete_document))
        .route("/workspace/export", get(export_workspace))
        .route("/workspace/import", post(import_workspace))
        .route("/operations", post(submit_operation))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/cancel", post(cancel_job))
        .route("/jobs/{id}/provenance", get(job_provenance))
        .route("/blocks/{id}/provenance", get(block_provenance))
        .route("/blocks/{id}/actions", post(block_action))
        .route("/resolve", post(resolve))
        .route("/goal", get(get_goal))
        .route("/goal/execute", post(execute_goal))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/start", post(start_task))
        .route("/tasks/{id}/persona", post(task_persona))
        .route("/tasks/{id}/do", post(do_task))
        .layer(axum::middleware::from_fn_with_state(state.clone(), idempotency))
        .with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] InvalidConfig),
    #[error("cannot bind {addr}: {reason}")]
    BindError { addr: SocketAddr, reason: String },
    #[error("provider setup failed: {0}")]
    Provider(String),
    #[error("stored workspace is unreadable: {0}")]
    Archive(#[from] ArchiveError),
    #[error("{0}")]
    Io(String),
}

pub fn build_provider(config: &Config) -> Result<Arc<dyn CompletionProvider>, ServeError> {
    Ok(match config.provider.kind {
        ProviderKind::Scripted => match &config.provider.fixtures {
            Some(path) => {
                Arc::new(ScriptedProvider::from_fixture_file(path).map_err(|e| ServeError::Provider(e.to_string()))?)
            }
            None => Arc::new(ScriptedProvider::new()),
        },
        ProviderKind::RemoteHttp => {
            Arc::new(RemoteHttpProvider::from_config(&config.provider).map_err(ServeError::Provider)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShutdownReport {
    pub cancelled: usize,
    pub jobs: Vec<(JobId, JobState)>,
}

pub struct ServiceHandle {
    pub addr: SocketAddr,
    state: AppState,
    grace: Duration,
    stop: Option<oneshot::Sender<()>>,
    server: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn engine(&self) -> &Engine {
        self.state.engine()
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    /// Stops accepting connections, lets running jobs finish within the
    /// grace period, cancels the rest and writes the workspace.
    pub async fn shutdown(mut self) -> Result<ShutdownReport, ServeError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        let engine = self.state.engine().clone();
        let (cancelled, server) = tokio::join!(engine.drain(self.grace), self.server);
        match server {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(ServeError::Io(e.to_string())),
            Err(e) => return Err(ServeError::Io(e.to_string())),
        }
        self.state.persist().map_err(|e| ServeError::Io(e.to_string()))?;
        let jobs = engine.jobs().into_iter().map(|j| (j.id, j.state)).collect();
        Ok(ShutdownReport { cancelled, jobs })
    }
}

fn load_store(path: &FsPath) -> Result<(DocumentStore, ProvenanceStore), ServeError> {
    let store = DocumentStore::new();
    let prov = ProvenanceStore::new();
    match std::fs::read(path) {
        Ok(bytes) => {
            Archive::decode(&bytes)?.install(&store, &prov).map_err(|e| ServeError::Io(e.to_string()))?;
            tracing::info!(path = %path.display(), "loaded workspace");
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(ServeError::Io(format!("{}: {e}", path.display()))),
    }
    Ok((store, prov))
}

/// Starts the service with its own provider built from `config`.
pub async fn serve(config: Config) -> Result<ServiceHandle, ServeError> {
    let provider = build_provider(&config)?;
    serve_with_provider(config, provider).await
}

pub async fn serve_with_provider(
    config: Config,
    provider: Arc<dyn CompletionProvider>,
) -> Result<ServiceHandle, ServeError> {
    crate::config::validate(&config)?;
    let addr = SocketAddr::new(config.host, config.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServeError::BindError { addr, reason: e.to_string() })?;
    let addr = listener.local_addr().map_err(|e| ServeError::Io(e.to_string()))?;

    std::fs::create_dir_all(&config.data_dir)
        .map_err(|e| ServeError::Io(format!("{}: {e}", config.data_dir.display())))?;
    let archive_path = config.data_dir.join(ARCHIVE_FILE);
    let (store, prov) = load_store(&archive_path)?;
    let audit = AuditLog::with_file(&config.data_dir.join(AUDIT_FILE)).map_err(|e| ServeError::Io(e.to_string()))?;
    let engine =
        Engine::with_audit(Arc::new(store), Arc::new(prov), provider, config.engine.clone(), audit);
    let state = AppState::new(engine, config.provider.kind, Some(archive_path));
    state.persist().map_err(|e| ServeError::Io(e.to_string()))?;

    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!(%addr, "orchid listening");
    Ok(ServiceHandle { addr, state, grace: config.shutdown_grace, stop: Some(stop), server })
}
