//! HTTP+JSON service used by the grading console and for human sessions.
//!
//! Mutating endpoints take a client-supplied `request_id`; a repeated id
//! gets the stored response back without touching any state.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use aiq_core::{
    FeedbackItem, IntelligenceScale, Modality, OutcomeStatus, QuestionBank, QuestionRecord,
    Session, SessionError, SessionStatus, Verdict, World,
};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clock::Clock;
use crate::config::{ConfigError, HarnessConfig};
use crate::golden;
use crate::registry::{BuildContext, Registry};
use crate::report::cohort_report;
use crate::runner::{run_session, LiveSession, RunError};
use crate::store::{SessionStore, StoreError};
use crate::subjects::{ProctorAnswer, ProctorChannel, SubmitError};

/// Cohort name under which the published table is served.
pub const GOLDEN_COHORT: &str = "published";

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", message)
    }

    fn body(&self) -> Value {
        json!({ "error": { "code": self.code, "message": self.message } })
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match e {
            SessionError::UnknownQuestion(_) | SessionError::UnknownRecord(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            SessionError::AlreadyGraded(_) => (StatusCode::CONFLICT, "already_graded"),
            SessionError::AutoGraded(_) => (StatusCode::CONFLICT, "auto_graded"),
            _ => (StatusCode::CONFLICT, "invalid_state"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::not_found(e.to_string()),
            StoreError::InvalidId(_) => ApiError::unprocessable(e.to_string()),
            StoreError::Exists(_) => ApiError::new(StatusCode::CONFLICT, "exists", e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store", e.to_string()),
        }
    }
}

impl From<RunError> for ApiError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Session(s) => s.into(),
            RunError::Store(s) => s.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "run", other.to_string()),
        }
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        let code = match e {
            SubmitError::NoQuestion => "no_question",
            SubmitError::WrongQuestion(_) => "wrong_question",
            SubmitError::AlreadyAnswered(_) => "already_answered",
            SubmitError::Closed => "closed",
        };
        ApiError::new(StatusCode::CONFLICT, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

type Reply = (StatusCode, Value);

#[derive(Debug, Clone)]
struct CachedReply {
    route: String,
    payload: Value,
    reply: Reply,
}

/// Everything the handlers share.
pub struct AppState {
    pub config: HarnessConfig,
    pub scale: IntelligenceScale,
    pub bank: Arc<QuestionBank>,
    pub registry: Registry,
    pub store: SessionStore,
    pub clock: Arc<dyn Clock>,
    world: Arc<Mutex<World>>,
    live: Mutex<HashMap<String, Arc<LiveSession>>>,
    proctors: Mutex<HashMap<String, ProctorChannel>>,
    requests: Mutex<HashMap<String, CachedReply>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl AppState {
    pub fn new(config: HarnessConfig, clock: Arc<dyn Clock>) -> Result<Self, StartupError> {
        config.validate()?;
        let scale = IntelligenceScale::default_scale();
        let bank = Arc::new(config.load_bank(&scale)?);
        let registry = config.load_registry()?;
        let store = SessionStore::open(config.sessions_dir())?;
        Ok(AppState {
            config,
            scale,
            bank,
            registry,
            store,
            clock,
            world: Arc::new(Mutex::new(World::new())),
            live: Mutex::new(HashMap::new()),
            proctors: Mutex::new(HashMap::new()),
            requests: Mutex::new(HashMap::new()),
        })
    }

    /// The single writer for a stored session, opened on first use.
    fn live_session(&self, session_id: &str) -> Result<Arc<LiveSession>, ApiError> {
        let mut live = lock(&self.live);
        if let Some(s) = live.get(session_id) {
            return Ok(s.clone());
        }
        let (session, log) = self.store.open_session(session_id)?;
        let s = Arc::new(LiveSession::new(session, log));
        live.insert(session_id.to_string(), s.clone());
        Ok(s)
    }

    fn session(&self, session_id: &str) -> Result<Session, ApiError> {
        if let Some(s) = lock(&self.live).get(session_id) {
            return Ok(s.snapshot());
        }
        Ok(self.store.load(session_id)?)
    }

    fn all_sessions(&self) -> Result<Vec<Session>, ApiError> {
        self.store
            .list()?
            .iter()
            .map(|id| self.session(id))
            .collect()
    }

    /// Runs `op` once per request id. A retry with the same id and payload
    /// gets the first reply; the same id with a different payload is refused.
    fn idempotent(
        &self,
        route: &str,
        body: &Bytes,
        op: impl FnOnce(&Value) -> Result<Reply, ApiError>,
    ) -> Response {
        let payload: Value = match serde_json::from_slice(body) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => return ApiError::unprocessable("body must be a JSON object").into_response(),
            Err(e) => return ApiError::unprocessable(e.to_string()).into_response(),
        };
        let Some(request_id) = payload
            .get("request_id")
            .and_then(Value::as_str)
            .map(String::from)
        else {
            return ApiError::unprocessable("request_id is required").into_response();
        };
        let mut requests = lock(&self.requests);
        if let Some(cached) = requests.get(&request_id) {
            if cached.route != route || cached.payload != payload {
                return ApiError::unprocessable(format!(
                    "request_id {request_id} was used for a different request"
                ))
                .into_response();
            }
            let (status, body) = cached.reply.clone();
            return (status, Json(body)).into_response();
        }
        let reply = op(&payload).unwrap_or_else(|e| (e.status, e.body()));
        if !reply.0.is_server_error() {
            requests.insert(
                request_id,
                CachedReply {
                    route: route.to_string(),
                    payload,
                    reply: reply.clone(),
                },
            );
        }
        (reply.0, Json(reply.1)).into_response()
    }
}

fn parse<T: for<'de> Deserialize<'de>>(payload: &Value) -> Result<T, ApiError> {
    serde_json::from_value(payload.clone()).map_err(|e| ApiError::unprocessable(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub subject_id: String,
    pub cohort: String,
    pub paper_id: String,
    pub status: SessionStatus,
    pub answered: usize,
    pub total: usize,
    pub pending: usize,
    pub flagged: usize,
    pub started_at_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u64>,
}

impl From<&Session> for SessionSummary {
    fn from(s: &Session) -> Self {
        SessionSummary {
            session_id: s.session_id.clone(),
            subject_id: s.subject_id.clone(),
            cohort: s.cohort.clone(),
            paper_id: s.paper_id.clone(),
            status: s.status,
            answered: s.records.len(),
            total: s.entries.len(),
            pending: s.pending().count(),
            flagged: s.flagged().count(),
            started_at_ms: s.started_at_ms,
            finished_at_ms: s.finished_at_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PendingItem {
    pub session_id: String,
    pub question_id: String,
    pub subtest_id: String,
    pub prompt: String,
    pub prompt_modality: Modality,
    pub rubric: Option<String>,
    pub evaluated_item: Option<FeedbackItem>,
    pub outcome_status: OutcomeStatus,
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    cohort: Option<String>,
    status: Option<SessionStatus>,
}

async fn list_sessions(
    State(app): State<Arc<AppState>>,
    Query(q): Query<ListQuery>,
) -> Result<Json<Vec<SessionSummary>>, ApiError> {
    let sessions = app.all_sessions()?;
    Ok(Json(
        sessions
            .iter()
            .filter(|s| q.cohort.as_ref().is_none_or(|c| &s.cohort == c))
            .filter(|s| q.status.is_none_or(|st| s.status == st))
            .map(SessionSummary::from)
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartRequest {
    #[allow(dead_code)]
    request_id: String,
    subject_id: String,
    cohort: String,
    #[serde(default)]
    session_id: Option<String>,
    /// Per-subject override of the cohort's seed.
    #[serde(default)]
    seed: Option<u64>,
}

fn start_session(app: &Arc<AppState>, req: StartRequest) -> Result<Reply, ApiError> {
    let descriptor = app
        .registry
        .get(&req.subject_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown subject {}", req.subject_id)))?
        .descriptor
        .clone();
    let seed = app.config.seed_policy.seed_for(&req.cohort, req.seed);
    let paper = app
        .bank
        .sample_paper(&app.scale, seed)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let now = app.clock.now_ms();
    let session_id = req
        .session_id
        .unwrap_or_else(|| format!("{}-{}-{now}", req.cohort, req.subject_id));

    let proctor = (descriptor.kind == aiq_core::SubjectKind::Human)
        .then(|| ProctorChannel::new(app.clock.clone()));
    let ctx = BuildContext {
        clock: app.clock.clone(),
        world: app.world.clone(),
        proctor: proctor.clone(),
    };
    let handle = app
        .registry
        .build(&req.subject_id, &ctx)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let live = Arc::new(LiveSession::start(
        &app.store,
        &session_id,
        &req.subject_id,
        &req.cohort,
        &paper,
        &app.bank,
        now,
    )?);
    let summary = SessionSummary::from(&live.snapshot());
    lock(&app.live).insert(session_id.clone(), live.clone());
    if let Some(p) = proctor {
        lock(&app.proctors).insert(session_id.clone(), p);
    }

    let app = app.clone();
    std::thread::spawn(move || {
        let result = run_session(&live, &handle, &app.bank, app.config.timeout(), &*app.clock);
        if let Err(e) = result {
            log::error!("session {session_id}: {e}");
        }
        if let Some(p) = lock(&app.proctors).remove(&session_id) {
            p.close();
        }
    });
    Ok((
        StatusCode::CREATED,
        serde_json::to_value(summary).expect("summaries serialize"),
    ))
}

async fn post_session(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let state = app.clone();
    app.idempotent("/sessions", &body, |payload| {
        start_session(&state, parse(payload)?)
    })
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Session>, ApiError> {
    Ok(Json(app.session(&id)?))
}

async fn get_pending(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<PendingItem>>, ApiError> {
    let session = app.session(&id)?;
    let items = session
        .pending()
        .map(|r| {
            let q = app.bank.get(&r.question_id);
            PendingItem {
                session_id: session.session_id.clone(),
                question_id: r.question_id.clone(),
                subtest_id: r.subtest_id.clone(),
                prompt: q.map(|q| q.prompt.clone()).unwrap_or_default(),
                prompt_modality: q.map_or(Modality::Text, |q| q.prompt_modality),
                rubric: q.and_then(|q| q.rubric.clone()),
                evaluated_item: r.evaluated_item.clone(),
                outcome_status: r.outcome.status(),
            }
        })
        .collect();
    Ok(Json(items))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradeRequest {
    #[allow(dead_code)]
    request_id: String,
    question_id: String,
    verdict: Verdict,
    grader_id: String,
    #[serde(default)]
    allow_regrade: bool,
}

#[derive(Serialize)]
struct GradeReply<'a> {
    session: SessionSummary,
    record: &'a QuestionRecord,
}

fn grade(app: &AppState, session_id: &str, req: GradeRequest) -> Result<Reply, ApiError> {
    let live = app.live_session(session_id)?;
    let now = app.clock.now_ms();
    live.commit(|s| {
        s.submit_manual_grade(
            &req.question_id,
            req.verdict,
            req.grader_id.clone(),
            req.allow_regrade,
            now,
        )
    })?;
    let session = live.snapshot();
    let record = session
        .record(&req.question_id)
        .expect("graded record exists");
    let reply = GradeReply {
        session: SessionSummary::from(&session),
        record,
    };
    Ok((
        StatusCode::OK,
        serde_json::to_value(reply).expect("replies serialize"),
    ))
}

async fn post_grade(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let route = format!("/sessions/{id}/grades");
    app.idempotent(&route, &body, |payload| grade(&app, &id, parse(payload)?))
}

fn proctor(app: &AppState, session_id: &str) -> Result<ProctorChannel, ApiError> {
    if let Some(p) = lock(&app.proctors).get(session_id) {
        return Ok(p.clone());
    }
    app.session(session_id)?;
    Err(ApiError::new(
        StatusCode::CONFLICT,
        "no_proctor",
        format!("session {session_id} has no active proctor channel"),
    ))
}

async fn proctor_next(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let channel = proctor(&app, &id)?;
    let Some(prompt) = channel.current() else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let now = app.clock.now_ms();
    let body = json!({
        "prompt": prompt,
        "server_now_ms": now,
        "remaining_ms": prompt.deadline_ms.saturating_sub(now),
    });
    Ok(Json(body).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    #[allow(dead_code)]
    request_id: String,
    question_id: String,
    answer: ProctorAnswer,
}

async fn proctor_answer(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let route = format!("/sessions/{id}/proctor/answer");
    app.idempotent(&route, &body, |payload| {
        let req: AnswerRequest = parse(payload)?;
        let channel = proctor(&app, &id)?;
        channel.submit(&req.question_id, req.answer)?;
        Ok((StatusCode::OK, json!({ "accepted": req.question_id })))
    })
}

async fn get_leaderboard(
    State(app): State<Arc<AppState>>,
    Path(cohort): Path<String>,
) -> Result<Response, ApiError> {
    if cohort == GOLDEN_COHORT {
        let cmp = golden::compare(&golden::table(), golden::DEFAULT_TOLERANCE).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "stats", e.to_string())
        })?;
        return Ok(Json(cmp).into_response());
    }
    let sessions = app.all_sessions()?;
    if !sessions.iter().any(|s| s.cohort == cohort) {
        return Err(ApiError::not_found(format!("unknown cohort {cohort}")));
    }
    let report = cohort_report(&cohort, &sessions, &app.scale, Some(&app.registry))
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, "stats", e.to_string()))?;
    Ok(Json(report).into_response())
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(post_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/pending", get(get_pending))
        .route("/sessions/{id}/grades", post(post_grade))
        .route("/sessions/{id}/proctor/next", get(proctor_next))
        .route("/sessions/{id}/proctor/answer", post(proctor_answer))
        .route("/leaderboard/{cohort}", get(get_leaderboard))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(app)
}

/// Serves until the process is stopped.
pub async fn serve(app: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(app)).await
}

/// Starts the service on its own runtime thread; returns the bound address.
pub fn spawn(app: Arc<AppState>, addr: &str) -> std::io::Result<SocketAddr> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let local = std_listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener =
                tokio::net::TcpListener::from_std(std_listener).expect("listener from std");
            if let Err(e) = serve(app, listener).await {
                log::error!("service stopped: {e}");
            }
        })
    });
    Ok(local)
}
