//! HTTP/1.1 + JSON surface of the service.
//!
//! | method | path | success |
//! |---|---|---|
//! | POST | `/simulation` (body: scenario document) | 201 `{"sim_id"}` |
//! | DELETE | `/simulation/{id}` | 200 run summary |
//! | POST | `/simulation/{id}/step?ticks=n` | 200 `{"time"}` (manual pacing) |
//! | GET | `/kpm/{cells,ue-serving,ue-neighbours}?since=t` | 200 rows |
//! | POST | `/action` (body: `{"cell_id","action"}`) | 200 ack |
//! | GET | `/metrics/aggregated?since=t` | 200 rows |
//!
//! Errors carry `{"error": message}` plus `"fields"` for scenario failures.

use std::net::SocketAddr;
use std::thread::JoinHandle;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::oneshot;

use super::{KpmKind, RicService, ServiceError};
use crate::sim::Action;

pub const BIND_ENV: &str = "RAN_ES_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub fn status_of(e: &ServiceError) -> u16 {
    match e {
        ServiceError::AlreadyRunning(_) | ServiceError::Finished | ServiceError::NotManual => 409,
        ServiceError::InvalidScenario(_) | ServiceError::UnknownCell(_) | ServiceError::MacroOff(_) => 400,
        ServiceError::UnknownSimulation(_) | ServiceError::NoSimulation => 404,
        ServiceError::Aborted(_) | ServiceError::Log(_) => 500,
    }
}

struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(status_of(&self.0)).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = json!({ "error": self.0.to_string() });
        if let ServiceError::InvalidScenario(fields) = &self.0 {
            body["fields"] = json!(fields);
        }
        (status, Json(body)).into_response()
    }
}

fn bad_request(msg: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": msg }))).into_response()
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<f64>,
}

#[derive(Deserialize)]
struct StepQuery {
    ticks: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionBody {
    cell_id: String,
    action: Action,
}

async fn start(State(svc): State<RicService>, body: String) -> Result<Response, ApiError> {
    let id = svc.start_document(&body)?;
    Ok((StatusCode::CREATED, Json(json!({ "sim_id": id }))).into_response())
}

async fn stop(State(svc): State<RicService>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let summary = tokio::task::spawn_blocking(move || svc.stop(&id))
        .await
        .map_err(|e| ServiceError::Aborted(e.to_string()))??;
    Ok(Json(summary).into_response())
}

async fn step(
    State(svc): State<RicService>,
    Path(id): Path<String>,
    Query(q): Query<StepQuery>,
) -> Result<Response, ApiError> {
    let ticks = q.ticks.unwrap_or(1);
    let time = tokio::task::spawn_blocking(move || svc.step(&id, ticks))
        .await
        .map_err(|e| ServiceError::Aborted(e.to_string()))??;
    Ok(Json(json!({ "time": time })).into_response())
}

async fn kpm(
    State(svc): State<RicService>,
    Path(kind): Path<String>,
    Query(q): Query<SinceQuery>,
) -> Result<Response, ApiError> {
    let Ok(kind) = serde_json::from_value::<KpmKind>(json!(kind)) else {
        return Ok((StatusCode::NOT_FOUND, Json(json!({ "error": format!("unknown report kind {kind}") })))
            .into_response());
    };
    Ok(match kind {
        KpmKind::Cells => Json(svc.cells(q.since)?).into_response(),
        KpmKind::UeServing => Json(svc.ue_serving(q.since)?).into_response(),
        KpmKind::UeNeighbours => Json(svc.ue_neighbours(q.since)?).into_response(),
    })
}

async fn action(State(svc): State<RicService>, body: String) -> Result<Response, ApiError> {
    let body: ActionBody = match serde_json::from_str(&body) {
        Ok(b) => b,
        Err(e) => return Ok(bad_request(format!("malformed action: {e}"))),
    };
    Ok(Json(svc.post_action(&body.cell_id, body.action)?).into_response())
}

async fn aggregated(State(svc): State<RicService>, Query(q): Query<SinceQuery>) -> Result<Response, ApiError> {
    Ok(Json(svc.aggregated(q.since)?).into_response())
}

pub fn router(service: RicService) -> Router {
    Router::new()
        .route("/simulation", post(start))
        .route("/simulation/{id}", delete(stop))
        .route("/simulation/{id}/step", post(step))
        .route("/kpm/{kind}", get(kpm))
        .route("/action", post(action))
        .route("/metrics/aggregated", get(aggregated))
        .with_state(service)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    service: RicService,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server on its own thread and runtime.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.close()
    }

    fn close(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub fn spawn_server(service: RicService, addr: &str) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let local = std_listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            serve(service, listener, async {
                let _ = rx.await;
            })
            .await
        })
    });
    Ok(ServerHandle {
        addr: local,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
