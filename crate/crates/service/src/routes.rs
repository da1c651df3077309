use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use camscope_core::aggregate::{build_aggregated_cam, AggregatedCam, AggregationMethod, VariabilityMethod};
use camscope_core::cam::{cam_for_prediction, LocalCam};
use camscope_core::session::{Annotation, FilterStep, HistogramView, Session, DEFAULT_HISTOGRAM_BINS};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub class_index: usize,
    pub name: String,
    pub n_samples: usize,
}

/// Snapshot of a drill-down session returned by every session endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub class_index: usize,
    pub filters: Vec<FilterStep>,
    pub n_active: usize,
    pub active_ids: Vec<String>,
    pub annotations: BTreeMap<usize, Annotation>,
}

impl SessionState {
    fn of(id: &str, session: &Session) -> Self {
        let export = session.export();
        Self {
            session_id: id.to_owned(),
            class_index: export.class_index,
            filters: export.filters,
            n_active: export.active_ids.len(),
            active_ids: export.active_ids,
            annotations: export.annotations,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct MethodQuery {
    agg: Option<String>,
    var: Option<String>,
}

impl MethodQuery {
    fn parse(&self) -> ApiResult<(AggregationMethod, VariabilityMethod)> {
        let agg = self.agg.as_deref().map_or(Ok(AggregationMethod::Mean), str::parse)?;
        let var = self.var.as_deref().map_or(Ok(VariabilityMethod::Entropy), str::parse)?;
        Ok((agg, var))
    }
}

#[derive(Debug, Deserialize)]
pub struct HistogramQuery {
    session: Option<String>,
    bins: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub class_index: usize,
}

#[derive(Debug, Deserialize)]
pub struct FilterRequest {
    pub feature_index: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Deserialize)]
pub struct AnnotationRequest {
    pub status: Option<Annotation>,
}

pub fn api_router() -> Router<AppState> {
    Router::new()
        .route("/classes", get(list_classes))
        .route("/classes/{class}/cam", get(class_cam))
        .route("/classes/{class}/features/{feature}/histogram", get(histogram))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_state))
        .route("/sessions/{id}/filters", post(push_filter).delete(reset_filters))
        .route("/sessions/{id}/filters/last", delete(pop_filter))
        .route("/sessions/{id}/cam", get(session_cam))
        .route("/sessions/{id}/annotations/{feature}", put(annotate))
        .route("/samples/{id}/cam", get(sample_cam))
        .fallback(|| async { ApiError::not_found() })
        .method_not_allowed_fallback(|| async { ApiError::method_not_allowed() })
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(v)| v).map_err(|e| ApiError::invalid_request(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::invalid_request(e.body_text()))
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(|e| ApiError::invalid_request(e.body_text()))
}

fn lock(session: &Mutex<Session>) -> MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn list_classes(State(state): State<AppState>) -> ApiResult<Json<Vec<ClassInfo>>> {
    let loaded = state.loaded()?;
    let classes = loaded
        .populated_classes()
        .map(|(c, m)| ClassInfo { class_index: c, name: loaded.class_name(c), n_samples: m.n_samples() })
        .collect();
    Ok(Json(classes))
}

async fn class_cam(
    State(state): State<AppState>,
    class: Result<Path<usize>, PathRejection>,
    q: Result<Query<MethodQuery>, QueryRejection>,
) -> ApiResult<Json<AggregatedCam>> {
    let loaded = state.loaded()?;
    let class = path(class)?;
    let (agg, var) = query(q)?.parse()?;
    let matrix = loaded.matrix(class)?;
    Ok(Json(build_aggregated_cam(matrix, agg, var)?))
}

async fn histogram(
    State(state): State<AppState>,
    p: Result<Path<(usize, usize)>, PathRejection>,
    q: Result<Query<HistogramQuery>, QueryRejection>,
) -> ApiResult<Json<HistogramView>> {
    let loaded = state.loaded()?;
    let (class, feature) = path(p)?;
    let q = query(q)?;
    let bins = q.bins.unwrap_or(DEFAULT_HISTOGRAM_BINS);
    let matrix = loaded.matrix(class)?;
    let view = match q.session {
        Some(id) => {
            let session = state.session(&id)?;
            let session = lock(&session);
            if session.class_index() != class {
                return Err(ApiError::invalid_request(format!(
                    "session `{id}` drills into class {}, not {class}",
                    session.class_index()
                )));
            }
            session.histogram(feature, bins)?
        }
        None => Session::new(Arc::clone(matrix)).histogram(feature, bins)?,
    };
    Ok(Json(view))
}

async fn create_session(
    State(state): State<AppState>,
    b: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionState>)> {
    let loaded = state.loaded()?;
    let req = body(b)?;
    let matrix = Arc::clone(loaded.matrix(req.class_index)?);
    let (id, session) = state.create_session(matrix);
    tracing::debug!(session = %id, class = req.class_index, "session created");
    let snapshot = SessionState::of(&id, &lock(&session));
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn session_state(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<SessionState>> {
    let id = path(id)?;
    let session = state.session(&id)?;
    let snapshot = SessionState::of(&id, &lock(&session));
    Ok(Json(snapshot))
}

async fn push_filter(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    b: Result<Json<FilterRequest>, JsonRejection>,
) -> ApiResult<Json<SessionState>> {
    let id = path(id)?;
    let session = state.session(&id)?;
    let req = body(b)?;
    let mut session = lock(&session);
    session.apply_filter(req.feature_index, req.lo, req.hi)?;
    Ok(Json(SessionState::of(&id, &session)))
}

async fn pop_filter(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<SessionState>> {
    let id = path(id)?;
    let session = state.session(&id)?;
    let mut session = lock(&session);
    session.pop_filter();
    Ok(Json(SessionState::of(&id, &session)))
}

async fn reset_filters(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<SessionState>> {
    let id = path(id)?;
    let session = state.session(&id)?;
    let mut session = lock(&session);
    session.reset();
    Ok(Json(SessionState::of(&id, &session)))
}

async fn session_cam(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<MethodQuery>, QueryRejection>,
) -> ApiResult<Json<AggregatedCam>> {
    let id = path(id)?;
    let (agg, var) = query(q)?.parse()?;
    let session = state.session(&id)?;
    let cam = lock(&session).subglobal_cam(agg, var)?;
    Ok(Json(cam))
}

async fn annotate(
    State(state): State<AppState>,
    p: Result<Path<(String, usize)>, PathRejection>,
    b: Result<Json<AnnotationRequest>, JsonRejection>,
) -> ApiResult<Json<SessionState>> {
    let (id, feature) = path(p)?;
    let session = state.session(&id)?;
    let req = body(b)?;
    let mut session = lock(&session);
    session.annotate(feature, req.status)?;
    Ok(Json(SessionState::of(&id, &session)))
}

async fn sample_cam(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<LocalCam>> {
    let loaded = state.loaded()?;
    let id = path(id)?;
    let input = loaded.sample_input(&id).ok_or_else(|| ApiError::unknown_sample(&id))?;
    Ok(Json(cam_for_prediction(&loaded.model, &id, input)?))
}
