//! HTTP/JSON sessions over the explanation engine.
//!
//! A session holds one instance, the current solution and an append-only
//! history of answered queries. Requests on the same session are serialized;
//! requests on different sessions run concurrently.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/healthz` | |
//! | POST | `/sessions` | generator config, inline instance, or `{"preset": name}` |
//! | GET | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/solve` | `{"mode": "optimal" \| "one-opt", "seed": n}` |
//! | POST | `/sessions/{id}/explain` | `{"query": {...}, "variant": "o1"}` |
//! | GET | `/sessions/{id}/history` | |
//! | POST | `/sessions/{id}/save` | |
//! | POST | `/sessions/load` | `{"session_id": id}` |

pub mod render;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use tower_http::cors::{Any, CorsLayer};

use xdcop_core::cedar::{run_cedar, CedarError, RunStats, Variant};
use xdcop_core::generators::{generate, GenConfig};
use xdcop_core::json::InstanceJson;
use xdcop_core::query::Query;
use xdcop_core::samples::{meeting_demo, three_variable_example};
use xdcop_core::solvers::{solve_1opt, solve_optimal, SolutionMode, SolveError, DEFAULT_NODE_BUDGET};
use xdcop_core::{Assignment, Cost, DcopInstance, Explanation};

use render::{render, Rendering};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Origin allowed by CORS; any origin when unset.
    pub cors_origin: Option<String>,
    /// Directory for saved sessions; saving is disabled when unset.
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub solution: Assignment,
    pub query: Query,
    pub variant: Variant,
    pub explanation: Explanation,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub instance: DcopInstance,
    pub solution: Option<Assignment>,
    pub solution_cost: Option<Cost>,
    pub solution_mode: Option<SolutionMode>,
    pub history: Vec<HistoryEntry>,
}

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    config: ServiceConfig,
    sessions: Mutex<BTreeMap<String, Shared>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self { config, sessions: Mutex::new(BTreeMap::new()), next_id: AtomicU64::new(1) })
    }

    fn insert(&self, instance: DcopInstance) -> Session {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session =
            Session { id: id.clone(), instance, solution: None, solution_cost: None, solution_mode: None, history: vec![] };
        self.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session.clone())));
        session
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message.to_string())
    }

    fn unprocessable(message: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

/// Parses a body, reporting both syntax and shape errors as 400.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(ApiError::bad_request)
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(v),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/healthz", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/sessions", post(create_session))
        .route("/sessions/load", post(load_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/solve", post(solve))
        .route("/sessions/{id}/explain", post(explain))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/save", post(save_session))
        .layer(cors)
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: &str, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Serialize)]
struct VariableSummary {
    id: u32,
    name: Option<String>,
    owner: u32,
    domain: Vec<i64>,
    labels: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
struct InstanceSummary {
    num_agents: usize,
    num_variables: usize,
    num_constraints: usize,
    agent_names: BTreeMap<u32, String>,
    variables: Vec<VariableSummary>,
}

fn summary(inst: &DcopInstance) -> InstanceSummary {
    InstanceSummary {
        num_agents: inst.agents().len(),
        num_variables: inst.variables().len(),
        num_constraints: inst.constraints().len(),
        agent_names: inst.agent_names().iter().map(|(a, n)| (a.0, n.clone())).collect(),
        variables: inst
            .variables()
            .iter()
            .map(|v| VariableSummary {
                id: v.id.0,
                name: v.name.clone(),
                owner: v.owner.0,
                domain: v.domain.clone(),
                labels: v.labels.clone(),
            })
            .collect(),
    }
}

fn created(session: &Session) -> Response {
    (StatusCode::CREATED, Json(json!({ "session_id": session.id, "instance": summary(&session.instance) })))
        .into_response()
}

fn preset(name: &str) -> Option<DcopInstance> {
    match name {
        "meeting-demo" => Some(meeting_demo()),
        "three-variable" => Some(three_variable_example()),
        _ => None,
    }
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let value: JsonValue = parse(&body)?;
    let Some(obj) = value.as_object() else {
        return Err(ApiError::bad_request("expected a JSON object"));
    };
    let instance = if obj.contains_key("preset") {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Preset {
            preset: String,
        }
        let p: Preset = serde_json::from_value(value).map_err(ApiError::bad_request)?;
        preset(&p.preset)
            .ok_or_else(|| ApiError::bad_request(format!("unknown preset `{}` (meeting-demo, three-variable)", p.preset)))?
    } else if obj.contains_key("kind") {
        let cfg: GenConfig = serde_json::from_value(value).map_err(ApiError::bad_request)?;
        cfg.validate().map_err(ApiError::bad_request)?;
        blocking(move || generate(&cfg).map_err(ApiError::bad_request)).await?
    } else if obj.contains_key("variables") {
        let j: InstanceJson = serde_json::from_value(value).map_err(ApiError::bad_request)?;
        DcopInstance::try_from(j).map_err(ApiError::unprocessable)?
    } else {
        return Err(ApiError::bad_request("body must be a generator config, an instance, or {\"preset\": name}"));
    };
    Ok(created(&state.insert(instance)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    let s = state.get(&id)?;
    let session = s.lock().unwrap().clone();
    Ok(Json(session))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveRequest {
    mode: SolutionMode,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    node_budget: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SolveResponse {
    solution: Assignment,
    cost: Cost,
    mode: SolutionMode,
    nodes_explored: u64,
}

async fn solve(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<SolveResponse>, ApiError> {
    let req: SolveRequest = parse(&body)?;
    let s = state.get(&id)?;
    blocking(move || {
        let mut session = s.lock().unwrap();
        let result = match req.mode {
            SolutionMode::Optimal => solve_optimal(&session.instance, req.node_budget.unwrap_or(DEFAULT_NODE_BUDGET)),
            SolutionMode::OneOpt => solve_1opt(&session.instance, req.seed),
        }
        .map_err(|e| match e {
            SolveError::BudgetExhausted(_) => ApiError::new(StatusCode::CONFLICT, e.to_string()),
            other => ApiError::unprocessable(other),
        })?;
        session.solution = Some(result.solution.clone());
        session.solution_cost = Some(result.cost);
        session.solution_mode = Some(req.mode);
        Ok(Json(SolveResponse {
            solution: result.solution,
            cost: result.cost,
            mode: req.mode,
            nodes_explored: result.nodes_explored,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplainRequest {
    query: Query,
    variant: Variant,
}

#[derive(Debug, Serialize)]
struct ExplainResponse {
    index: usize,
    query: Query,
    variant: Variant,
    explanation: Explanation,
    stats: RunStats,
    valid: bool,
    rendering: Rendering,
}

async fn explain(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ExplainResponse>, ApiError> {
    let req: ExplainRequest = parse(&body)?;
    let s = state.get(&id)?;
    blocking(move || {
        let mut session = s.lock().unwrap();
        let sigma = session
            .solution
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "session has no solution yet; solve first"))?;
        let (explanation, stats) = run_cedar(req.variant, &session.instance, &sigma, &req.query).map_err(|e| match e {
            CedarError::MalformedQuery(_) | CedarError::Model(_) => ApiError::unprocessable(e),
            CedarError::Sim(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        })?;
        let rendering = render(&session.instance, &explanation, stats.valid);
        session.history.push(HistoryEntry {
            solution: sigma,
            query: req.query.clone(),
            variant: req.variant,
            explanation: explanation.clone(),
            stats,
        });
        Ok(Json(ExplainResponse {
            index: session.history.len() - 1,
            query: req.query,
            variant: req.variant,
            explanation,
            stats,
            valid: stats.valid,
            rendering,
        }))
    })
    .await
}

async fn history(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Vec<HistoryEntry>>, ApiError> {
    let s = state.get(&id)?;
    let h = s.lock().unwrap().history.clone();
    Ok(Json(h))
}

fn data_dir(state: &AppState) -> Result<PathBuf, ApiError> {
    state
        .config
        .data_dir
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "persistence is disabled (no data directory configured)"))
}

fn session_file(dir: &std::path::Path, id: &str) -> Result<PathBuf, ApiError> {
    let ok = id.len() > 1 && id.starts_with('s') && id[1..].bytes().all(|b| b.is_ascii_digit());
    if !ok {
        return Err(ApiError::bad_request(format!("invalid session id `{id}`")));
    }
    Ok(dir.join(format!("{id}.json")))
}

async fn save_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<JsonValue>, ApiError> {
    let dir = data_dir(&state)?;
    let s = state.get(&id)?;
    let path = session_file(&dir, &id)?;
    let text = serde_json::to_string_pretty(&*s.lock().unwrap())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let io_err = |e: std::io::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    tokio::fs::create_dir_all(&dir).await.map_err(io_err)?;
    tokio::fs::write(&path, text).await.map_err(io_err)?;
    Ok(Json(json!({ "session_id": id, "file": path.display().to_string() })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadRequest {
    session_id: String,
}

async fn load_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: LoadRequest = parse(&body)?;
    let dir = data_dir(&state)?;
    let path = session_file(&dir, &req.session_id)?;
    let text = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("no saved session `{}`", req.session_id)))?;
    let saved: Session = serde_json::from_slice(&text).map_err(ApiError::unprocessable)?;
    let mut fresh = state.insert(saved.instance.clone());
    fresh.solution = saved.solution;
    fresh.solution_cost = saved.solution_cost;
    fresh.solution_mode = saved.solution_mode;
    fresh.history = saved.history;
    let shared = state.get(&fresh.id)?;
    *shared.lock().unwrap() = fresh.clone();
    Ok(created(&fresh))
}
