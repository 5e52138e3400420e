//! HTTP front of a run center.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tfpaas_core::protocol::{
    decode_instructions, encode_measurement, encode_outcome, encode_status, RunReport,
    StatusDocument, XML_CONTENT_TYPE,
};

use crate::{RunCenter, RunError};

pub const DEFAULT_DISPATCH_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Clone)]
struct AppState {
    center: Arc<RunCenter>,
    timeout: Duration,
}

pub fn router(center: Arc<RunCenter>, timeout: Duration) -> Router {
    Router::new()
        .route("/execute", post(execute))
        .route("/status", get(status))
        .with_state(AppState { center, timeout })
}

fn xml(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, XML_CONTENT_TYPE)], body).into_response()
}

fn text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

/// 200 with a measurement or outcome document, 400 for undecodable input,
/// 504 past the dispatch timeout and 422 when the run itself failed.
async fn execute(State(state): State<AppState>, body: String) -> Response {
    let instructions = match decode_instructions(&body) {
        Ok(d) => d.value,
        Err(e) => return text(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let report = match state.center.run_with_timeout(&instructions, state.timeout).await {
        Ok(r) => r,
        Err(e @ RunError::Timeout(_)) => return text(StatusCode::GATEWAY_TIMEOUT, e.to_string()),
        Err(e @ RunError::Invalid(_)) => return text(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => return text(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let encoded = match &report {
        RunReport::Measurement(m) => encode_measurement(m),
        RunReport::Outcome(o) => encode_outcome(o),
    };
    match encoded {
        Ok(doc) => xml(StatusCode::OK, doc),
        Err(e) => text(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn status(State(state): State<AppState>) -> Response {
    xml(
        StatusCode::OK,
        encode_status(&StatusDocument {
            busy: state.center.is_busy(),
        }),
    )
}
