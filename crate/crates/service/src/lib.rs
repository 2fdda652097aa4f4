//! HTTP API behind the exploration UI.
//!
//! Sessions hold an uploaded (or demo) corpus in memory and cache every
//! index computed from it. Nothing is written to disk.

mod metrics;
mod session;
mod views;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use divkit_core::patterns::{
    check_ui_n, DEFAULT_EXACT_MIN_DOCS, DEFAULT_PATTERN_MIN_DOCS, DEFAULT_TOP_N,
};
use divkit_core::{
    avg_length, exact_matches, extract_patterns, Corpus, Embedder, Format, MetricsConfig, Tagger,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use metrics::{
    guide, Entry, GuideEntry, MetricView, MetricsResponse, StatusResponse, DASHBOARD,
};
pub use session::{Session, SessionStore};

/// Default pattern length in the templates tab.
pub const DEFAULT_N: usize = 4;

#[derive(Clone)]
pub struct ServiceConfig {
    pub demo_dir: Option<PathBuf>,
    pub ttl: Duration,
    pub max_upload_bytes: usize,
    pub metrics: MetricsConfig,
    pub embedder: Option<Arc<Embedder>>,
    /// Allowed UI origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            demo_dir: None,
            ttl: Duration::from_secs(60 * 60),
            max_upload_bytes: 20 * 1024 * 1024,
            metrics: MetricsConfig::default(),
            embedder: None,
            cors_origin: None,
        }
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    pub sessions: SessionStore,
    pub demos: BTreeMap<String, Corpus>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> divkit_core::Result<Self> {
        let demos = match &config.demo_dir {
            Some(dir) => load_demos(dir)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            sessions: SessionStore::new(config.ttl),
            config,
            demos,
        })
    }

    fn create_session(&self, corpus: Corpus) -> Arc<Session> {
        let fp = self.config.metrics.bleu_kind().fingerprint();
        self.sessions
            .insert(Session::new(session::new_session_id(), corpus, fp))
    }
}

/// Every `*.txt`, `*.jsonl`, `*.csv` or `*.tagged` file in `dir`, keyed by
/// file stem.
pub fn load_demos(dir: &Path) -> divkit_core::Result<BTreeMap<String, Corpus>> {
    let entries = std::fs::read_dir(dir).map_err(|source| divkit_core::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut demos = BTreeMap::new();
    for entry in entries.flatten() {
        let path = entry.path();
        let known = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("txt" | "jsonl" | "csv" | "tagged")
        );
        if !path.is_file() || !known {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        demos.insert(id, Corpus::load(&path, Format::from_path(&path), None)?);
    }
    Ok(demos)
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn not_found(sid: &str) -> ApiError {
    ApiError(
        StatusCode::NOT_FOUND,
        format!("unknown or expired session `{sid}`"),
    )
}

fn unprocessable(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.into())
}

fn internal(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, msg.to_string())
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(AllowOrigin::any()),
    }
    .allow_methods(tower_http::cors::Any)
    .allow_headers(tower_http::cors::Any)
    .expose_headers([
        header::RETRY_AFTER,
        header::HeaderName::from_static("x-cache"),
    ]);

    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/api/demos", get(list_demos))
        .route("/api/demos/{id}", post(open_demo))
        .route(
            "/api/corpus",
            post(upload).layer(DefaultBodyLimit::max(limit)),
        )
        .route("/api/tagset", get(tagset))
        .route("/api/{sid}", get(session_info).delete(delete_session))
        .route("/api/{sid}/documents", get(documents))
        .route("/api/{sid}/patterns", get(patterns))
        .route("/api/{sid}/exact", get(exact))
        .route("/api/{sid}/metrics", get(metrics))
        .route("/api/{sid}/metrics/status", get(metrics_status))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until the process ends. Expired sessions are
/// swept in the background.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config).map_err(std::io::Error::other)?);
    let sweeper = state.clone();
    let period = state
        .config
        .ttl
        .min(Duration::from_secs(60))
        .max(Duration::from_secs(1));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.sessions.sweep();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    doc_count: usize,
    avg_length: f64,
    total_tokens: usize,
}

fn created(s: &Session) -> SessionCreated {
    SessionCreated {
        session_id: s.id.clone(),
        doc_count: s.corpus.len(),
        avg_length: avg_length(&s.corpus),
        total_tokens: s.corpus.total_tokens(),
    }
}

#[derive(Serialize)]
struct DemoInfo {
    id: String,
    doc_count: usize,
    avg_length: f64,
}

async fn list_demos(State(state): Shared) -> Json<Vec<DemoInfo>> {
    Json(
        state
            .demos
            .iter()
            .map(|(id, c)| DemoInfo {
                id: id.clone(),
                doc_count: c.len(),
                avg_length: avg_length(c),
            })
            .collect(),
    )
}

async fn open_demo(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionCreated>, ApiError> {
    let corpus = state
        .demos
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown demo `{id}`")))?;
    Ok(Json(created(&state.create_session(corpus))))
}

#[derive(Deserialize)]
struct UploadParams {
    format: Option<String>,
    field: Option<String>,
    /// Original file name, used to guess the format.
    filename: Option<String>,
}

async fn upload(
    State(state): Shared,
    Query(p): Query<UploadParams>,
    body: Bytes,
) -> Result<Json<SessionCreated>, ApiError> {
    let format = match (&p.format, &p.filename) {
        (Some(f), _) => f
            .parse::<Format>()
            .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?,
        (None, Some(name)) => Format::from_path(Path::new(name)),
        (None, None) => Format::Lines,
    };
    let corpus = Corpus::parse(&body, format, p.field.as_deref())
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(Json(created(&state.create_session(corpus))))
}

async fn tagset() -> Json<&'static divkit_core::tagger::Tagset> {
    Json(divkit_core::tagger::tagset())
}

fn session(state: &AppState, sid: &str) -> Result<Arc<Session>, ApiError> {
    state.sessions.get(sid).ok_or_else(|| not_found(sid))
}

#[derive(Serialize)]
struct SessionInfo {
    #[serde(flatten)]
    stats: SessionCreated,
    expires_in_s: u64,
}

async fn session_info(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    let s = session(&state, &sid)?;
    Ok(Json(SessionInfo {
        stats: created(&s),
        expires_in_s: state
            .config
            .ttl
            .saturating_sub(s.created.elapsed())
            .as_secs(),
    }))
}

async fn delete_session(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
) -> Result<StatusCode, ApiError> {
    if state.sessions.remove(&sid) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(not_found(&sid))
    }
}

async fn documents(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<Vec<views::DocumentView>>, ApiError> {
    Ok(Json(views::documents(&session(&state, &sid)?.corpus)))
}

fn cached_json(value: Arc<serde_json::Value>, hit: bool) -> Response {
    let mut resp = Json(value.as_ref()).into_response();
    resp.headers_mut().insert(
        header::HeaderName::from_static("x-cache"),
        HeaderValue::from_static(if hit { "hit" } else { "miss" }),
    );
    resp
}

#[derive(Deserialize)]
struct PatternParams {
    n: Option<usize>,
    top_n: Option<usize>,
    min_docs: Option<usize>,
}

async fn patterns(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
    Query(p): Query<PatternParams>,
) -> Result<Response, ApiError> {
    let s = session(&state, &sid)?;
    let n = p.n.unwrap_or(DEFAULT_N);
    check_ui_n(n).map_err(|e| unprocessable(e.to_string()))?;
    let top_n = p.top_n.unwrap_or(DEFAULT_TOP_N);
    let min_docs = p.min_docs.unwrap_or(DEFAULT_PATTERN_MIN_DOCS);
    if top_n == 0 || min_docs == 0 {
        return Err(unprocessable("top_n and min_docs must be >= 1"));
    }
    let slot = s.pattern_slot((n, top_n, min_docs));
    let mut computed = false;
    let value = slot
        .get_or_try_init(|| async {
            computed = true;
            let tagged = metrics::tagged(&s).await.map_err(internal)?;
            tokio::task::spawn_blocking(move || {
                let idx = extract_patterns(&tagged, &Tagger::builtin(), n, top_n, min_docs)?;
                Ok::<_, divkit_core::Error>(Arc::new(
                    serde_json::to_value(views::patterns(&tagged, &idx)).expect("serializable"),
                ))
            })
            .await
            .map_err(internal)?
            .map_err(internal)
        })
        .await?;
    Ok(cached_json(value.clone(), !computed))
}

#[derive(Deserialize)]
struct ExactParams {
    n: Option<usize>,
    min_docs: Option<usize>,
}

async fn exact(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
    Query(p): Query<ExactParams>,
) -> Result<Response, ApiError> {
    let s = session(&state, &sid)?;
    let n = p.n.unwrap_or(DEFAULT_N);
    let min_docs = p.min_docs.unwrap_or(DEFAULT_EXACT_MIN_DOCS);
    check_ui_n(n).map_err(|e| unprocessable(format!("string length: {e}")))?;
    check_ui_n(min_docs).map_err(|e| unprocessable(format!("min_docs: {e}")))?;
    let slot = s.exact_slot((n, min_docs));
    let mut computed = false;
    let corpus = s.corpus.clone();
    let value = slot
        .get_or_try_init(|| async {
            computed = true;
            tokio::task::spawn_blocking(move || {
                let idx = exact_matches(&corpus, n, min_docs, false)?;
                Ok::<_, divkit_core::Error>(Arc::new(
                    serde_json::to_value(views::exact(&corpus, &idx)).expect("serializable"),
                ))
            })
            .await
            .map_err(internal)?
            .map_err(internal)
        })
        .await?;
    Ok(cached_json(value.clone(), !computed))
}

async fn metrics(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
) -> Result<Response, ApiError> {
    let s = session(&state, &sid)?;
    let report = metrics::report(&state, &s).await;
    if report.complete {
        Ok(Json(report).into_response())
    } else {
        Ok((
            StatusCode::ACCEPTED,
            [(header::RETRY_AFTER, "1")],
            Json(report),
        )
            .into_response())
    }
}

async fn metrics_status(
    State(state): Shared,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<StatusResponse>, ApiError> {
    Ok(Json(metrics::status(&*session(&state, &sid)?)))
}
