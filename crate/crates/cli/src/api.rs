//! HTTP API.
//!
//! Request and response bodies are JSON except trajectory and interval
//! uploads (JSONL) and CSV exports. Errors are `{"code", "message"}` with a
//! code from [`ErrorCode`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use contrace_core::epi::{integrate, CompartmentState, EpiParams, Model, SeriesPoint};
use contrace_core::ingest::{read_intervals_jsonl, IntervalRow};
use contrace_core::store::io::read_points_jsonl;
use contrace_core::{Area, Error, GeoPoint, Investigation, PatientStatus, PersonId, Timestamp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::service::{self, InvestigationRequest, Service};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ConflictingDuplicate,
    UnknownPerson,
    NoPatients,
    IllegalTransition,
    BadRequest,
    Internal,
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(rename = "http_status", serialize_with = "status_code")]
    pub status: StatusCode,
}

fn status_code<S: serde::Serializer>(s: &StatusCode, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_u16(s.as_u16())
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::BadRequest,
            message: message.into(),
            status: StatusCode::BAD_REQUEST,
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            ..ApiError::bad_request(message)
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (code, status) = match &e {
            Error::ConflictingDuplicate { .. } | Error::DuplicateReport(_) => {
                (ErrorCode::ConflictingDuplicate, StatusCode::CONFLICT)
            }
            Error::UnknownPerson(_) => (ErrorCode::UnknownPerson, StatusCode::NOT_FOUND),
            Error::NoPatients => (ErrorCode::NoPatients, StatusCode::UNPROCESSABLE_ENTITY),
            Error::IllegalTransition { .. } => (ErrorCode::IllegalTransition, StatusCode::CONFLICT),
            Error::EmptyWindow => (ErrorCode::BadRequest, StatusCode::UNPROCESSABLE_ENTITY),
            Error::Io(_) => (ErrorCode::Internal, StatusCode::INTERNAL_SERVER_ERROR),
            _ => (ErrorCode::BadRequest, StatusCode::BAD_REQUEST),
        };
        ApiError {
            code,
            message: e.to_string(),
            status,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    svc: RwLock<Service>,
    /// Investigations run one at a time.
    running: tokio::sync::Mutex<()>,
    cache: Mutex<HashMap<String, Arc<Investigation>>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(svc: Service) -> Self {
        AppState(Arc::new(Inner {
            svc: RwLock::new(svc),
            running: tokio::sync::Mutex::new(()),
            cache: Mutex::new(HashMap::new()),
        }))
    }

    fn investigation(&self, id: &str) -> ApiResult<Arc<Investigation>> {
        if let Some(inv) = self.0.cache.lock().unwrap().get(id) {
            return Ok(inv.clone());
        }
        let data = self.0.svc.read().unwrap().data().clone();
        let inv = Arc::new(data.load_investigation(id).map_err(|e| match e {
            Error::Invalid(m) => ApiError::not_found(m),
            other => other.into(),
        })?);
        self.0.cache.lock().unwrap().insert(id.to_string(), inv.clone());
        Ok(inv)
    }
}

pub fn router(svc: Service) -> Router {
    Router::new()
        .route("/v1/points", post(post_points))
        .route("/v1/intervals", post(post_intervals))
        .route("/v1/areas", post(post_areas))
        .route("/v1/patients", post(post_patient))
        .route("/v1/patients/{id}/status", post(post_status))
        .route("/v1/investigations", post(post_investigation))
        .route("/v1/investigations/{id}/{view}", get(get_investigation_view))
        .route("/v1/query/{person_id}", get(get_query))
        .route("/v1/epi/estimate", get(get_estimate))
        .route("/v1/epi/simulate", post(post_simulate))
        .with_state(AppState::new(svc))
}

fn json_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("bad request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::from(Error::Io(std::io::Error::other(e))))?
}

#[derive(Serialize)]
struct AppendResponse {
    accepted: usize,
    duplicates: usize,
}

async fn post_points(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<AppendResponse>> {
    blocking(move || {
        let pts = read_points_jsonl(&body[..], "request body")?;
        let r = st.0.svc.write().unwrap().ingest_points(pts)?;
        Ok(Json(AppendResponse {
            accepted: r.accepted,
            duplicates: r.duplicates,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct IntervalParams {
    delta_t_s: Option<i64>,
}

async fn post_intervals(
    State(st): State<AppState>,
    Query(q): Query<IntervalParams>,
    body: Bytes,
) -> ApiResult<Json<AppendResponse>> {
    blocking(move || {
        let rows: Vec<IntervalRow> = read_intervals_jsonl(&body[..], "request body")?;
        let dt = q.delta_t_s.unwrap_or_else(service::defaults::delta_t_s);
        if dt < 0 {
            return Err(ApiError::bad_request("delta_t_s must be >= 0"));
        }
        let r = st.0.svc.write().unwrap().ingest_mixed(Vec::new(), &rows, dt)?;
        Ok(Json(AppendResponse {
            accepted: r.accepted,
            duplicates: r.duplicates,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct AreaBody {
    area_id: String,
    lat: f64,
    lon: f64,
    radius_m: f64,
}

async fn post_areas(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let list: Vec<AreaBody> = json_body(&body)?;
    let areas = list
        .into_iter()
        .map(|a| Area::new(a.area_id, GeoPoint::new(a.lat, a.lon)?, a.radius_m))
        .collect::<contrace_core::Result<Vec<_>>>()?;
    let n = areas.len();
    st.0.svc.write().unwrap().set_areas(areas)?;
    Ok(Json(serde_json::json!({ "areas": n })))
}

#[derive(Deserialize)]
struct PatientBody {
    person_id: String,
    confirmed_at: i64,
}

#[derive(Serialize)]
struct PatientResponse {
    person_id: String,
    status: PatientStatus,
    confirmed_at: Timestamp,
}

impl From<contrace_core::PatientRecord> for PatientResponse {
    fn from(r: contrace_core::PatientRecord) -> Self {
        PatientResponse {
            person_id: r.person.to_string(),
            status: r.status,
            confirmed_at: r.confirmed_at,
        }
    }
}

async fn post_patient(State(st): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<PatientResponse>)> {
    let b: PatientBody = json_body(&body)?;
    let person = PersonId::new(b.person_id)?;
    let rec =
        st.0.svc
            .write()
            .unwrap()
            .report_patient(person, Timestamp::new(b.confirmed_at)?)?;
    Ok((StatusCode::CREATED, Json(rec.into())))
}

#[derive(Deserialize)]
struct StatusBody {
    status: String,
}

async fn post_status(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PatientResponse>> {
    let b: StatusBody = json_body(&body)?;
    let status: PatientStatus = b.status.parse()?;
    let person = PersonId::new(id)?;
    let rec = st.0.svc.write().unwrap().set_status(&person, status)?;
    Ok(Json(rec.into()))
}

async fn post_investigation(
    State(st): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let req: InvestigationRequest = json_body(&body)?;
    let cfg = req.config()?;
    let inner = st.0.clone();
    let _turn = inner.running.lock().await;
    let id = blocking(move || {
        let (data, snap, areas) = {
            let svc = st.0.svc.read().unwrap();
            (svc.data().clone(), svc.snapshot(&cfg), svc.areas().to_vec())
        };
        let (id, inv) = service::execute_investigation(&data, &snap, &areas, cfg)?;
        st.0.cache.lock().unwrap().insert(id.clone(), Arc::new(inv));
        Ok(id)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(serde_json::json!({ "investigation_id": id }))))
}

#[derive(Deserialize)]
struct FormatParams {
    format: Option<String>,
}

#[derive(Serialize)]
struct ClassRow<'a> {
    person_id: &'a str,
    distance_class: usize,
    contact_ts: Timestamp,
}

#[derive(Serialize)]
struct BlackAreaRow<'a> {
    area_id: &'a str,
    count: usize,
    is_black: bool,
}

#[derive(Serialize)]
struct SuspectRow<'a> {
    area_id: &'a str,
    person_id: &'a str,
    visit_ts: Timestamp,
}

async fn get_investigation_view(
    State(st): State<AppState>,
    Path((id, view)): Path<(String, String)>,
    Query(q): Query<FormatParams>,
) -> ApiResult<Response> {
    let file = match view.as_str() {
        "classes" => "classes.csv",
        "black-areas" => "black_areas.csv",
        "suspects-by-area" => "suspects_by_area.csv",
        other => return Err(ApiError::not_found(format!("no view {other}"))),
    };
    let inv = st.investigation(&id)?;
    match q.format.as_deref() {
        Some("csv") => {
            let data = st.0.svc.read().unwrap().data().clone();
            let bytes = std::fs::read(data.investigation_file(&id, file)?).map_err(Error::from)?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response())
        }
        None | Some("json") => Ok(match view.as_str() {
            "classes" => Json(
                inv.classification
                    .classes()
                    .iter()
                    .enumerate()
                    .flat_map(|(d, c)| {
                        c.iter().map(move |m| ClassRow {
                            person_id: m.person.as_str(),
                            distance_class: d,
                            contact_ts: m.contact_ts,
                        })
                    })
                    .collect::<Vec<_>>(),
            )
            .into_response(),
            "black-areas" => Json(
                inv.black_areas
                    .areas
                    .iter()
                    .map(|a| BlackAreaRow {
                        area_id: &a.area.area_id,
                        count: a.count,
                        is_black: a.is_black,
                    })
                    .collect::<Vec<_>>(),
            )
            .into_response(),
            _ => Json(
                inv.suspects
                    .areas
                    .iter()
                    .flat_map(|a| {
                        a.visitors.iter().map(move |(p, t)| SuspectRow {
                            area_id: &a.area_id,
                            person_id: p.as_str(),
                            visit_ts: *t,
                        })
                    })
                    .collect::<Vec<_>>(),
            )
            .into_response(),
        }),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other}"))),
    }
}

#[derive(Deserialize)]
struct QueryParams {
    investigation: Option<String>,
}

fn resolve(st: &AppState, id: Option<&str>) -> ApiResult<String> {
    let data = st.0.svc.read().unwrap().data().clone();
    data.resolve_investigation(id)
        .map_err(|e| ApiError::not_found(e.to_string()))
}

async fn get_query(
    State(st): State<AppState>,
    Path(person): Path<String>,
    Query(q): Query<QueryParams>,
) -> ApiResult<Json<contrace_core::QueryResponse>> {
    let id = resolve(&st, q.investigation.as_deref())?;
    let inv = st.investigation(&id)?;
    Ok(Json(inv.query(&person)?))
}

#[derive(Deserialize)]
struct EstimateParams {
    investigation: Option<String>,
    p_trans: f64,
}

async fn get_estimate(
    State(st): State<AppState>,
    Query(q): Query<EstimateParams>,
) -> ApiResult<Json<service::EstimateResponse>> {
    let id = resolve(&st, q.investigation.as_deref())?;
    st.investigation(&id)?;
    let data = st.0.svc.read().unwrap().data().clone();
    Ok(Json(service::epi_estimate(&data, &id, q.p_trans)?))
}

#[derive(Deserialize)]
struct SimParams {
    beta: f64,
    gamma: f64,
    #[serde(default)]
    sigma: Option<f64>,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct SimInit {
    S: f64,
    #[serde(default)]
    E: f64,
    I: f64,
    #[serde(default)]
    R: f64,
}

#[derive(Deserialize)]
struct SimulateBody {
    model: Model,
    params: SimParams,
    init: SimInit,
    horizon: f64,
    step: f64,
    /// Keep every k-th step; defaults to all.
    #[serde(default)]
    every: Option<usize>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct SeriesRow {
    t_days: f64,
    S: f64,
    E: f64,
    I: f64,
    R: f64,
}

impl From<&SeriesPoint> for SeriesRow {
    fn from(p: &SeriesPoint) -> Self {
        let c = &p.state;
        SeriesRow {
            t_days: p.t_days,
            S: c.s,
            E: c.e,
            I: c.i,
            R: c.r,
        }
    }
}

/// Upper bound on returned rows so one request cannot exhaust memory.
const MAX_SERIES_ROWS: f64 = 1_000_000.0;

async fn post_simulate(Query(q): Query<FormatParams>, body: Bytes) -> ApiResult<Response> {
    let b: SimulateBody = json_body(&body)?;
    let every = b.every.unwrap_or(1).max(1);
    if b.step > 0.0 && b.horizon / b.step / every as f64 > MAX_SERIES_ROWS {
        return Err(ApiError::bad_request("series too long; raise step or every"));
    }
    let params = EpiParams {
        sigma: b.params.sigma.unwrap_or(1.0),
        ..EpiParams::sir(b.params.beta, b.params.gamma)
    };
    if b.model == Model::Seir && b.params.sigma.is_none() {
        return Err(ApiError::bad_request("seir needs params.sigma"));
    }
    let i = &b.init;
    let init = CompartmentState {
        s: i.S,
        e: i.E,
        i: i.I,
        r: i.R,
        n: i.S + i.E + i.I + i.R,
    };
    let series = blocking(move || Ok(integrate(b.model, &params, &init, b.horizon, b.step, every)?)).await?;
    match q.format.as_deref() {
        Some("csv") => {
            let mut buf = Vec::new();
            contrace_core::epi::write_series_csv(&mut buf, &series)?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response())
        }
        None | Some("json") => Ok(Json(series.iter().map(SeriesRow::from).collect::<Vec<_>>()).into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other}"))),
    }
}
