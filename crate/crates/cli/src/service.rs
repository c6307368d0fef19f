//! HTTP service: sessions with chained what-if rounds, diffs and solves.

use std::collections::HashMap;
use std::convert::Infallible;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;
use whatif_core::agent::{
    commander_run_observed, AgentConfig, ChatProvider, Phase, SessionOutcome,
};
use whatif_core::graph::{decision_information, GedReport};
use whatif_core::model::{parse_model, LinearModel, ModelError};
use whatif_core::solver::{solve_milp, Solution, DEFAULT_NODE_LIMIT};

/// Mock-script session used when a session has no label.
pub const DEFAULT_LABEL: &str = "default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    /// Routes scripted provider lookups; real providers ignore it.
    pub label: String,
    pub model_source: String,
    /// Source the next round starts from.
    pub current_source: String,
    pub config: AgentConfig,
    pub base_solution: Solution,
    pub history: Vec<SessionOutcome>,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SessionEvent {
    Phase {
        round: usize,
        phase: Phase,
        retry_count: u32,
    },
    Outcome {
        round: usize,
        status: String,
        objective: Option<f64>,
    },
}

impl SessionEvent {
    fn name(&self) -> &'static str {
        match self {
            SessionEvent::Phase { .. } => "phase",
            SessionEvent::Outcome { .. } => "outcome",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum JournalEntry {
    Created {
        record: Box<SessionRecord>,
    },
    Round {
        outcome: Box<SessionOutcome>,
        at: u64,
    },
}

struct Session {
    record: Mutex<SessionRecord>,
    busy: AtomicBool,
    events: broadcast::Sender<SessionEvent>,
}

/// Clears the in-flight flag however the round ends.
struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    provider: Arc<dyn ChatProvider>,
    defaults: AgentConfig,
    journal_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(
        provider: Arc<dyn ChatProvider>,
        defaults: AgentConfig,
        journal_dir: Option<PathBuf>,
    ) -> Arc<Self> {
        Arc::new(AppState {
            sessions: RwLock::new(HashMap::new()),
            provider,
            defaults,
            journal_dir,
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "unknown-session",
                    format!("no session `{id}`"),
                )
            })
    }

    fn journal(&self, id: &str, entry: &JournalEntry) {
        let Some(dir) = &self.journal_dir else { return };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(journal_path(dir, id))?;
            writeln!(
                f,
                "{}",
                serde_json::to_string(entry).expect("journal entries serialize")
            )
        };
        if let Err(e) = write() {
            eprintln!("journal write for session {id} failed: {e}");
        }
    }
}

pub fn journal_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.jsonl"))
}

/// Rebuilds a session record from its journal.
pub fn replay_journal(path: &Path) -> anyhow::Result<SessionRecord> {
    let text = std::fs::read_to_string(path)?;
    let mut record: Option<SessionRecord> = None;
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let entry: JournalEntry = serde_json::from_str(line)
            .map_err(|e| anyhow::anyhow!("journal line {}: {e}", n + 1))?;
        match entry {
            JournalEntry::Created { record: r } => record = Some(*r),
            JournalEntry::Round { outcome, at } => {
                let r = record.as_mut().ok_or_else(|| {
                    anyhow::anyhow!("journal line {}: round before creation", n + 1)
                })?;
                record_round(r, *outcome, at);
            }
        }
    }
    record.ok_or_else(|| anyhow::anyhow!("journal has no session"))
}

fn record_round(record: &mut SessionRecord, outcome: SessionOutcome, at: u64) {
    if let (true, Some(updated)) = (outcome.is_done(), &outcome.updated_source) {
        record.current_source = updated.clone();
    }
    record.history.push(outcome);
    record.updated_at = at;
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({"error": kind, "detail": detail.into()}),
        }
    }

    fn model(field: &str, e: &ModelError) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({"error": "model", "field": field, "detail": e.to_string(), "line": e.line()}),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_field(field: &str, text: &str) -> Result<LinearModel, ApiError> {
    parse_model(text).map_err(|e| ApiError::model(field, &e))
}

/// Solution as served: timing zeroed so equal requests get equal bytes.
pub fn served_solution(mut s: Solution) -> Solution {
    s.stats.wall_time_us = 0;
    s
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub model_source: String,
    #[serde(default)]
    pub config: Option<AgentConfig>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub base_solution: Solution,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let model = parse_field("model_source", &req.model_source)?;
    let base = tokio::task::spawn_blocking(move || solve_milp(&model, DEFAULT_NODE_LIMIT))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let base = served_solution(base);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let t = now();
    let record = SessionRecord {
        session_id: id.clone(),
        label: req.label.unwrap_or_else(|| DEFAULT_LABEL.into()),
        model_source: req.model_source.clone(),
        current_source: req.model_source,
        config: req.config.unwrap_or_else(|| state.defaults.clone()),
        base_solution: base.clone(),
        history: Vec::new(),
        created_at: t,
        updated_at: t,
    };
    state.journal(
        &id,
        &JournalEntry::Created {
            record: Box::new(record.clone()),
        },
    );
    let (events, _) = broadcast::channel(64);
    state.sessions.write().unwrap().insert(
        id.clone(),
        Arc::new(Session {
            record: Mutex::new(record),
            busy: AtomicBool::new(false),
            events,
        }),
    );
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: id,
            base_solution: base,
        }),
    ))
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    /// Scripted-provider session for this round, overriding the label.
    #[serde(default)]
    pub script: Option<String>,
}

async fn run_query(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<QueryRequest>,
) -> Result<Response, ApiError> {
    if req.text.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty-query",
            "query text is empty",
        ));
    }
    let session = state.session(&id)?;
    if session
        .busy
        .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
        .is_err()
    {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "query-in-flight",
            format!("session `{id}` is already answering a query"),
        ));
    }
    let _guard = BusyGuard(&session.busy);
    let (source, config, tag, round) = {
        let r = session.record.lock().unwrap();
        let tag = req.script.clone().unwrap_or_else(|| r.label.clone());
        (
            r.current_source.clone(),
            r.config.clone(),
            tag,
            r.history.len() + 1,
        )
    };
    let model = parse_model(&source).expect("session sources always parse");
    let provider = state.provider.clone();
    let events = session.events.clone();
    let text = req.text.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        commander_run_observed(&model, &text, &tag, &config, provider.as_ref(), &mut |e| {
            let _ = events.send(SessionEvent::Phase {
                round,
                phase: e.phase,
                retry_count: e.retry_count,
            });
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;

    let at = now();
    record_round(&mut session.record.lock().unwrap(), outcome.clone(), at);
    state.journal(
        &id,
        &JournalEntry::Round {
            outcome: Box::new(outcome.clone()),
            at,
        },
    );
    let _ = session.events.send(SessionEvent::Outcome {
        round,
        status: if outcome.is_done() { "done" } else { "failed" }.into(),
        objective: outcome.rounded_objective(),
    });

    match &outcome.failure {
        Some(f) if f.provider_error => Ok((
            StatusCode::BAD_GATEWAY,
            Json(json!({"error": "provider", "detail": f.detail, "outcome": outcome})),
        )
            .into_response()),
        _ => Ok(Json(outcome).into_response()),
    }
}

async fn session_events(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = state.session(&id)?.events.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => {
                    let event = Event::default()
                        .event(ev.name())
                        .data(serde_json::to_string(&ev).expect("events serialize"));
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionRecord>, ApiError> {
    let session = state.session(&id)?;
    let record = session.record.lock().unwrap().clone();
    Ok(Json(record))
}

#[derive(Debug, Deserialize)]
pub struct DiffRequest {
    /// The original model.
    pub model_a: String,
    /// The updated model.
    pub model_b: String,
}

async fn diff(Json(req): Json<DiffRequest>) -> Result<Json<GedReport>, ApiError> {
    let a = parse_field("model_a", &req.model_a)?;
    let b = parse_field("model_b", &req.model_b)?;
    Ok(Json(decision_information(&a, &b)))
}

#[derive(Debug, Deserialize)]
pub struct SolveRequest {
    pub model_source: String,
}

async fn solve(Json(req): Json<SolveRequest>) -> Result<Json<Solution>, ApiError> {
    let model = parse_field("model_source", &req.model_source)?;
    let s = tokio::task::spawn_blocking(move || solve_milp(&model, DEFAULT_NODE_LIMIT))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(Json(served_solution(s)))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", post(run_query))
        .route("/sessions/{id}/events", get(session_events))
        .route("/diff", post(diff))
        .route("/solve", post(solve))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, host: &str, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
