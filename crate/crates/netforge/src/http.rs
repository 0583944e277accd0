use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use netforge_core::orchestrator::{read_log, Engine, EngineError, ExperimentRecord};
use netforge_core::planner::Request;
use serde_json::{json, Value};

/// JSON error body with a status code.
struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownExperiment(_) => ApiError(StatusCode::NOT_FOUND, e.to_string()),
            other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/requests", post(submit))
        .route("/requests/{id}", get(record))
        .route("/requests/{id}/log", get(log))
        .route("/requests/{id}/teardown", post(teardown))
        .route("/actions", get(actions))
        .with_state(engine)
}

pub async fn serve(engine: Arc<Engine>, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    axum::serve(listener, router(engine)).await
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, EngineError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

/// Accepts a request, records it and executes it on a worker thread.
async fn submit(State(engine): State<Arc<Engine>>, body: Bytes) -> Result<Response, ApiError> {
    let document: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}")))?;
    let request = Request::from_json_value(&document)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let created = {
        let engine = engine.clone();
        blocking(move || engine.create_experiment(document)).await?
    };
    let id = created.experiment_id.clone();
    tokio::task::spawn_blocking(move || {
        if let Err(e) = engine.proceed(created, &request) {
            eprintln!("experiment failed to complete: {e}");
        }
    });
    let location = format!("/requests/{id}");
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, location)],
        Json(json!({ "experiment_id": id, "status": "created" })),
    )
        .into_response())
}

async fn record(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
) -> Result<Json<ExperimentRecord>, ApiError> {
    Ok(Json(blocking(move || engine.load_record(&id)).await?))
}

async fn log(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let lines = blocking(move || {
        engine.load_record(&id)?;
        read_log(&engine.workspace().log_path(&id))
    })
    .await?;
    let mut body = String::new();
    for entry in lines {
        body.push_str(&serde_json::to_string(&entry).expect("log entry serializes"));
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn actions(State(engine): State<Arc<Engine>>) -> Json<Value> {
    Json(serde_json::to_value(engine.registry().descriptors()).expect("descriptors serialize"))
}

async fn teardown(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = {
        let (engine, id) = (engine.clone(), id.clone());
        blocking(move || engine.load_record(&id)).await?
    };
    if !record.status.is_terminal() {
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("experiment `{id}` is still {}", record.status),
        ));
    }
    tokio::task::spawn_blocking(move || {
        if let Err(e) = engine.teardown(&id) {
            eprintln!("teardown of `{id}` failed: {e}");
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "experiment_id": record.experiment_id }))).into_response())
}
