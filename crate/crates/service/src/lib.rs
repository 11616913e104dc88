//! HTTP/JSON service hosting live elicitation sessions.
//!
//! Endpoints: `POST /sessions`, `GET /sessions/{id}`,
//! `POST /sessions/{id}/tuples`, `DELETE /sessions/{id}/tuples/{index}`,
//! `GET /sessions/{id}/band?m=`, `GET /sessions/{id}/risk?grid=&m=`,
//! `GET /sessions/{id}/suggest?m=`.

pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use utilgasp::{AssessedTuple, AttributeDomain, FitConfig, MeanBasis, NoiseModel};

pub use session::{Band, BandPoint, FitSummary, LambdaPoint, Risk, Session, SessionError, Snapshot, Suggestion};

pub const DEFAULT_BAND_POINTS: usize = 101;
pub const DEFAULT_RISK_GRID: usize = 1000;
pub const DEFAULT_LAMBDA_POINTS: usize = 101;
pub const DEFAULT_CANDIDATES: usize = 201;

type Shared = Arc<RwLock<Session>>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Shared>>>,
    persist: Option<Arc<PathBuf>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes a JSON snapshot to `dir` after every mutation and reloads
    /// existing snapshots from it.
    pub fn with_persistence(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let state = Self { sessions: Default::default(), persist: Some(Arc::new(dir.clone())) };
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&path)?;
                let snap: Snapshot = serde_json::from_str(&text)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
                let s = Session::restore(snap).map_err(|e| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e:?}", path.display()))
                })?;
                state.insert(s);
            }
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&self, s: Session) -> Shared {
        let id = s.id().to_string();
        let shared = Arc::new(RwLock::new(s));
        self.sessions.write().unwrap().insert(id, shared.clone());
        shared
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id:?}")))
    }

    fn save(&self, s: &Session) -> Result<(), ApiError> {
        let Some(dir) = &self.persist else { return Ok(()) };
        write_snapshot(dir, s.snapshot()).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    }
}

fn write_snapshot(dir: &Path, snap: &Snapshot) -> std::io::Result<()> {
    let tmp = dir.join(format!("{}.json.tmp", snap.id));
    std::fs::write(&tmp, serde_json::to_vec_pretty(snap)?)?;
    std::fs::rename(tmp, dir.join(format!("{}.json", snap.id)))
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
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
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Invalid(m) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, m),
            SessionError::NotFitted(n) => {
                Self::new(StatusCode::CONFLICT, format!("need at least 2 tuples before fitting, have {n}"))
            }
            SessionError::NoSuchTuple(i) => Self::new(StatusCode::NOT_FOUND, format!("no tuple at index {i}")),
            SessionError::Numeric(m) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, m),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

/// A scalar or a vector in request bodies.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coords {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Coords::Scalar(v) => vec![v],
            Coords::Vector(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct DomainRequest {
    pub lower: Coords,
    pub upper: Coords,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TupleRequest {
    pub x: Coords,
    pub u: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    pub domain: DomainRequest,
    #[serde(default)]
    pub noise_model: NoiseModel,
    /// Mean basis in the `MeanBasis::parse` syntax; ignored when `config` is given.
    pub basis: Option<String>,
    pub config: Option<FitConfig>,
    #[serde(default)]
    pub tuples: Vec<TupleRequest>,
}

fn invalid(msg: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, msg)
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<FitSummary>), ApiError> {
    let Json(req) = body.map_err(|e| invalid(e.body_text()))?;
    let domain = AttributeDomain::new(req.domain.lower.into_vec(), req.domain.upper.into_vec())
        .map_err(|e| invalid(e.to_string()))?;
    let p = domain.dim();
    let config = match req.config {
        Some(c) => c,
        None => {
            let basis = match &req.basis {
                Some(b) => MeanBasis::parse(b, p).map_err(|e| invalid(e.to_string()))?,
                None => MeanBasis::constant(),
            };
            session::default_config(p, basis, req.noise_model)
        }
    };
    let tuples = req.tuples.into_iter().map(|t| AssessedTuple::new(t.x.into_vec(), t.u)).collect();
    let s = Session::new(domain, req.noise_model, config, tuples)?;
    app.save(&s)?;
    let summary = s.summary();
    app.insert(s);
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<FitSummary>, ApiError> {
    let shared = app.get(&id)?;
    let s = shared.read().unwrap();
    Ok(Json(s.summary()))
}

async fn add_tuple(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<TupleRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<FitSummary>, ApiError> {
    let shared = app.get(&id)?;
    let Json(t) = body.map_err(|e| invalid(e.body_text()))?;
    let mut s = shared.write().unwrap();
    let summary = s.add_tuple(AssessedTuple::new(t.x.into_vec(), t.u))?;
    app.save(&s)?;
    Ok(Json(summary))
}

async fn remove_tuple(
    State(app): State<AppState>,
    UrlPath((id, index)): UrlPath<(String, usize)>,
) -> Result<Json<FitSummary>, ApiError> {
    let shared = app.get(&id)?;
    let mut s = shared.write().unwrap();
    let summary = s.remove_tuple(index)?;
    app.save(&s)?;
    Ok(Json(summary))
}

#[derive(Debug, Deserialize)]
struct GridQuery {
    m: Option<usize>,
    grid: Option<usize>,
}

async fn band(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<GridQuery>,
) -> Result<Json<Band>, ApiError> {
    let shared = app.get(&id)?;
    let s = shared.read().unwrap();
    Ok(Json(s.band(q.m.unwrap_or(DEFAULT_BAND_POINTS))?))
}

async fn risk(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<GridQuery>,
) -> Result<Json<Risk>, ApiError> {
    let shared = app.get(&id)?;
    let s = shared.read().unwrap();
    Ok(Json(s.risk(q.grid.unwrap_or(DEFAULT_RISK_GRID), q.m.unwrap_or(DEFAULT_LAMBDA_POINTS))?))
}

async fn suggest(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<GridQuery>,
) -> Result<Json<Suggestion>, ApiError> {
    let shared = app.get(&id)?;
    let s = shared.read().unwrap();
    Ok(Json(s.suggest(q.m.unwrap_or(DEFAULT_CANDIDATES))?))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/tuples", post(add_tuple))
        .route("/sessions/{id}/tuples/{index}", delete(remove_tuple))
        .route("/sessions/{id}/band", get(band))
        .route("/sessions/{id}/risk", get(risk))
        .route("/sessions/{id}/suggest", get(suggest))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
