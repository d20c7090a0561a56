//! HTTP front of the dashboard.
//!
//! | method | path | body / query | reply |
//! |---|---|---|---|
//! | POST | `/gateways` | `GatewayRegistration` | `{"sensors": n}` |
//! | POST | `/measurements` | `Measurement` | `IngestAck` |
//! | POST | `/slots` | `SlotNotice` | `IngestAck` |
//! | GET | `/series` | `sensor`, `from`, `to` | `SeriesResponse` |
//! | POST | `/listeners` | `Subscription` | `SubscriptionAck` |
//! | DELETE | `/listeners/{id}` | | 204 |
//! | POST | `/reconfig` | `ReconfigCommand` | `DeliveryReport` |
//! | GET | `/reconfig/{id}` | | `DeliveryReport` |
//! | POST | `/reconfig/{id}/ack` | `CommandAck` | `DeliveryReport` |
//! | GET | `/gateways/{id}/commands` | | `[DispatchedCommand]` |
//! | GET | `/sensors/{id}` | | `SensorStatus` |
//! | POST | `/failures` | `FailureReport` | `FailureRecord` |
//! | GET | `/failures` | `sensor` (optional) | `[FailureRecord]` |
//! | GET | `/metrics` | | `Metrics` |
//!
//! Errors come back as `{"error": kind, "message": text}` with 400 for
//! malformed input, 404 for unknown targets, 409 for duplicates and DPS
//! desynchronisation, and 422 for listener endpoints that cannot be
//! reached.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use sensorloop_core::protocol::*;
use serde::{Deserialize, Serialize};

use crate::dashboard::{Dashboard, DashboardError};

impl IntoResponse for DashboardError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            DashboardError::Invalid(_) => (StatusCode::BAD_REQUEST, "invalid"),
            DashboardError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            DashboardError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            DashboardError::Unreachable(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unreachable"),
            DashboardError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(serde_json::json!({ "error": kind, "message": self.to_string() }))).into_response()
    }
}

type Reply<T> = Result<Json<T>, DashboardError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, DashboardError> {
    payload.map(|Json(v)| v).map_err(|e| DashboardError::Invalid(e.body_text()))
}

/// Dashboard calls touch files, locks and possibly the weather service, so
/// they run off the async workers.
async fn blocking<T, F>(dashboard: Arc<Dashboard>, f: F) -> Reply<T>
where
    T: Send + 'static,
    F: FnOnce(&Dashboard) -> Result<T, DashboardError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&dashboard))
        .await
        .map_err(|e| DashboardError::Internal(e.to_string()))?
        .map(Json)
}

#[derive(Debug, Deserialize)]
struct SeriesQuery {
    sensor: String,
    from: Option<i64>,
    to: Option<i64>,
}

#[derive(Debug, Deserialize)]
struct FailureQuery {
    sensor: Option<String>,
}

#[derive(Debug, Serialize)]
struct Registered {
    sensors: usize,
}

pub fn router(dashboard: Arc<Dashboard>) -> Router {
    Router::new()
        .route("/gateways", post(register_gateway))
        .route("/gateways/:id/commands", get(poll_commands))
        .route("/measurements", post(ingest))
        .route("/slots", post(slot))
        .route("/series", get(series))
        .route("/listeners", post(register_listener))
        .route("/listeners/:id", delete(deregister_listener))
        .route("/reconfig", post(reconfig))
        .route("/reconfig/:id", get(command_status))
        .route("/reconfig/:id/ack", post(acknowledge))
        .route("/sensors/:id", get(sensor_status))
        .route("/failures", post(report_failure).get(list_failures))
        .route("/metrics", get(metrics))
        .route("/health", get(|| async { "ok" }))
        .with_state(dashboard)
}

async fn register_gateway(
    State(d): State<Arc<Dashboard>>,
    payload: Result<Json<GatewayRegistration>, JsonRejection>,
) -> Reply<Registered> {
    let reg = body(payload)?;
    blocking(d, move |d| d.register_gateway(&reg).map(|sensors| Registered { sensors })).await
}

async fn ingest(State(d): State<Arc<Dashboard>>, payload: Result<Json<Measurement>, JsonRejection>) -> Reply<IngestAck> {
    let m = body(payload)?;
    blocking(d, move |d| d.ingest(m)).await
}

async fn slot(State(d): State<Arc<Dashboard>>, payload: Result<Json<SlotNotice>, JsonRejection>) -> Reply<IngestAck> {
    let notice = body(payload)?;
    blocking(d, move |d| d.slot(notice)).await
}

async fn series(State(d): State<Arc<Dashboard>>, Query(q): Query<SeriesQuery>) -> Reply<SeriesResponse> {
    blocking(d, move |d| d.query_series(&q.sensor, q.from.unwrap_or(i64::MIN), q.to.unwrap_or(i64::MAX))).await
}

async fn register_listener(
    State(d): State<Arc<Dashboard>>,
    payload: Result<Json<Subscription>, JsonRejection>,
) -> Reply<SubscriptionAck> {
    let sub = body(payload)?;
    blocking(d, move |d| d.register_listener(&sub)).await
}

async fn deregister_listener(State(d): State<Arc<Dashboard>>, Path(id): Path<u64>) -> Result<StatusCode, DashboardError> {
    blocking(d, move |d| d.deregister_listener(id)).await.map(|_| StatusCode::NO_CONTENT)
}

async fn reconfig(
    State(d): State<Arc<Dashboard>>,
    payload: Result<Json<ReconfigCommand>, JsonRejection>,
) -> Reply<DeliveryReport> {
    let command = body(payload)?;
    blocking(d, move |d| d.dispatch_reconfig(command)).await
}

async fn command_status(State(d): State<Arc<Dashboard>>, Path(id): Path<u64>) -> Reply<DeliveryReport> {
    blocking(d, move |d| d.command_report(id)).await
}

async fn acknowledge(
    State(d): State<Arc<Dashboard>>,
    Path(id): Path<u64>,
    payload: Result<Json<CommandAck>, JsonRejection>,
) -> Reply<DeliveryReport> {
    let ack = body(payload)?;
    blocking(d, move |d| d.acknowledge(id, &ack)).await
}

async fn poll_commands(State(d): State<Arc<Dashboard>>, Path(id): Path<String>) -> Reply<Vec<DispatchedCommand>> {
    blocking(d, move |d| d.poll_commands(&id)).await
}

async fn sensor_status(State(d): State<Arc<Dashboard>>, Path(id): Path<String>) -> Reply<SensorStatus> {
    blocking(d, move |d| d.sensor_status(&id)).await
}

async fn report_failure(
    State(d): State<Arc<Dashboard>>,
    payload: Result<Json<FailureReport>, JsonRejection>,
) -> Reply<FailureRecord> {
    let report = body(payload)?;
    blocking(d, move |d| d.report_failure(&report)).await
}

async fn list_failures(State(d): State<Arc<Dashboard>>, Query(q): Query<FailureQuery>) -> Reply<Vec<FailureRecord>> {
    blocking(d, move |d| Ok(d.failures(q.sensor.as_deref()))).await
}

async fn metrics(State(d): State<Arc<Dashboard>>) -> Reply<Metrics> {
    blocking(d, |d| Ok(d.metrics())).await
}
