//! TFPaaS service: accepts SOAP test envelopes, turns them into instruction
//! sets, dispatches them to a run center and keeps the results.
//!
//! Endpoints:
//!
//! * `POST /tfps` submit an envelope. Critical runs reply 200 with the
//!   verdict; master runs reply 202 and finish in the background.
//! * `GET /results/{task_id}` HTML detail page.
//! * `GET /results/{task_id}.xml` result envelope.

pub mod dispatch;
pub mod report;
pub mod store;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Utc};
use tfpaas_core::model::{
    evaluate, summarize, AdaptiveOutcome, MeasurementSummary, RunMode, RunStatus,
};
use tfpaas_core::protocol::{
    decode_request, encode_fault, encode_result, Fault, InstructionSet, ResultEnvelope, RunReport,
    TestEnvelope, TestResultRecord, SOAP_CONTENT_TYPE, XML_CONTENT_TYPE,
};
use tfpaas_runcenter::adaptive::empty_summary;
use uuid::Uuid;

pub use dispatch::{DispatchError, Dispatcher};
pub use report::render_report;
pub use store::{ResultStore, ScanReport, StoreError};

pub const MAX_BODY_BYTES: usize = 1024 * 1024;
pub const DEFAULT_CRITICAL_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_MASTER_TIMEOUT: Duration = Duration::from_secs(3600);

/// Copies the envelope into an executable instruction set. Missing load
/// falls back to the default profile; master runs always carry adaptive
/// parameters.
pub fn parse_to_instructions(env: &TestEnvelope, task_id: Uuid) -> InstructionSet {
    InstructionSet {
        task_id,
        identity: env.application.clone(),
        case: env.case.clone(),
        criteria: env.criteria,
        profile: env.load.unwrap_or_default(),
        adaptive: match env.mode {
            RunMode::Master => Some(env.adaptive.unwrap_or_default()),
            RunMode::Critical => None,
        },
    }
}

pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Prefix of detail URLs, e.g. `http://127.0.0.1:8080`.
    pub base_url: String,
    pub critical_timeout: Duration,
    pub master_timeout: Duration,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, base_url: impl Into<String>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            base_url: base_url.into(),
            critical_timeout: DEFAULT_CRITICAL_TIMEOUT,
            master_timeout: DEFAULT_MASTER_TIMEOUT,
        }
    }
}

pub struct Service {
    store: ResultStore,
    dispatcher: Dispatcher,
    base_url: String,
    critical_timeout: Duration,
    master_timeout: Duration,
}

impl Service {
    /// Opens the store. Tasks left PENDING by a previous process can no longer
    /// finish and are closed as FAILED.
    pub fn open(config: ServiceConfig, dispatcher: Dispatcher) -> Result<(Service, ScanReport), StoreError> {
        let (store, report) = ResultStore::open(&config.data_dir)?;
        for id in store.task_ids() {
            if store.status(id) == Some(RunStatus::Pending) {
                let mut r = store.fetch_result(id)?;
                r.result = ResultEnvelope::failed(
                    id,
                    r.result.detail_url.clone(),
                    "E_INTERRUPTED: service restarted before the run finished",
                );
                r.finished_at = Some(Utc::now());
                store.update_result(&r)?;
            }
        }
        Ok((
            Service {
                store,
                dispatcher,
                base_url: config.base_url.trim_end_matches('/').to_string(),
                critical_timeout: config.critical_timeout,
                master_timeout: config.master_timeout,
            },
            report,
        ))
    }

    pub fn store(&self) -> &ResultStore {
        &self.store
    }

    pub fn detail_url(&self, id: Uuid) -> String {
        format!("{}/results/{}", self.base_url, id.hyphenated())
    }

    fn record(
        &self,
        env: &TestEnvelope,
        i: &InstructionSet,
        submitted_at: DateTime<Utc>,
        result: ResultEnvelope,
    ) -> TestResultRecord {
        let finished_at = result.status.is_terminal().then(Utc::now);
        TestResultRecord {
            task_id: i.task_id,
            mode: env.mode,
            submitted_at,
            finished_at,
            identity: i.identity.clone(),
            case: i.case.clone(),
            criteria: i.criteria,
            profile: i.profile,
            adaptive: i.adaptive,
            result,
        }
    }

    fn done(&self, i: &InstructionSet, report: RunReport) -> ResultEnvelope {
        let (summary, adaptive) = match report {
            RunReport::Measurement(m) => (
                summarize(&m).unwrap_or_else(|_| empty_summary(m.error_count())),
                None,
            ),
            RunReport::Outcome(o) => (master_summary(&o), Some(o)),
        };
        ResultEnvelope {
            status: RunStatus::Done,
            verdict: Some(evaluate(&summary, &i.criteria)),
            summary: Some(summary),
            adaptive,
            ..ResultEnvelope::pending(i.task_id, self.detail_url(i.task_id))
        }
    }

    fn fresh_id(&self) -> Uuid {
        loop {
            let id = Uuid::new_v4();
            if self.store.status(id).is_none() {
                return id;
            }
        }
    }

    /// Runs the whole submission flow and returns the HTTP status with the
    /// result envelope to send back.
    pub async fn submit(self: &Arc<Self>, env: TestEnvelope) -> Result<(StatusCode, ResultEnvelope), StoreError> {
        let submitted_at = Utc::now();
        let i = parse_to_instructions(&env, self.fresh_id());
        match env.mode {
            RunMode::Critical => {
                let (status, result) = match self.dispatcher.dispatch(&i, self.critical_timeout).await {
                    Ok(report) => (StatusCode::OK, self.done(&i, report)),
                    Err(e) => (
                        StatusCode::BAD_GATEWAY,
                        ResultEnvelope::failed(i.task_id, self.detail_url(i.task_id), e.to_string()),
                    ),
                };
                let record = self.record(&env, &i, submitted_at, result.clone());
                self.store.store_result(&record)?;
                Ok((status, result))
            }
            RunMode::Master => {
                let pending = ResultEnvelope::pending(i.task_id, self.detail_url(i.task_id));
                let record = self.record(&env, &i, submitted_at, pending.clone());
                self.store.store_result(&record)?;
                let svc = self.clone();
                tokio::spawn(async move {
                    let result = match svc.dispatcher.dispatch(&i, svc.master_timeout).await {
                        Ok(report) => svc.done(&i, report),
                        Err(e) => ResultEnvelope::failed(i.task_id, svc.detail_url(i.task_id), e.to_string()),
                    };
                    let finished = TestResultRecord {
                        finished_at: Some(Utc::now()),
                        result,
                        ..record
                    };
                    if let Err(e) = svc.store.update_result(&finished) {
                        eprintln!("tfps: cannot store result of {}: {e}", i.task_id);
                    }
                });
                Ok((StatusCode::ACCEPTED, pending))
            }
        }
    }
}

/// Summary reported for a master run: the highest passing level, or the
/// first probe when nothing passed.
fn master_summary(o: &AdaptiveOutcome) -> MeasurementSummary {
    o.final_summary
        .or_else(|| o.traces.first().map(|t| t.summary))
        .unwrap_or_else(|| empty_summary(0))
}

fn soap(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, SOAP_CONTENT_TYPE)], body).into_response()
}

fn fault(status: StatusCode, f: Fault) -> Response {
    soap(status, encode_fault(&f))
}

async fn submit(State(svc): State<Arc<Service>>, body: String) -> Response {
    let env = match decode_request(&body) {
        Ok(d) => d.value,
        Err(e) => return fault(StatusCode::BAD_REQUEST, Fault::sender(e.to_string())),
    };
    match svc.submit(env).await {
        Ok((status, result)) => match encode_result(&result) {
            Ok(xml) => soap(status, xml),
            Err(e) => fault(StatusCode::INTERNAL_SERVER_ERROR, Fault::receiver(e.to_string())),
        },
        Err(e) => fault(StatusCode::INTERNAL_SERVER_ERROR, Fault::receiver(e.to_string())),
    }
}

async fn result(State(svc): State<Arc<Service>>, Path(name): Path<String>) -> Response {
    let (stem, as_xml) = match name.strip_suffix(".xml") {
        Some(stem) => (stem, true),
        None => (name.as_str(), false),
    };
    let not_found = || (StatusCode::NOT_FOUND, format!("E_UNKNOWN_TASK: {name}\n")).into_response();
    let Ok(id) = Uuid::parse_str(stem) else {
        return not_found();
    };
    let record = match svc.store.fetch_result(id) {
        Ok(r) => r,
        Err(StoreError::UnknownTask(_)) => return not_found(),
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    if as_xml {
        match encode_result(&record.result) {
            Ok(xml) => ([(header::CONTENT_TYPE, XML_CONTENT_TYPE)], xml).into_response(),
            Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        }
    } else {
        (
            [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
            render_report(&record),
        )
            .into_response()
    }
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/tfps", post(submit))
        .route("/results/{name}", get(result))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(svc)
}
