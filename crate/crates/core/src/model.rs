//! Domain types shared by the client, the service and the run center, plus
//! measurement summarization and criteria evaluation.
//!
//! The types are plain records with public fields. Their invariants are checked
//! by `validate` methods at the boundaries (decoding, encoding, script parsing)
//! rather than by construction, so that invalid values can be represented and
//! rejected with a precise error.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use uuid::Uuid;

use crate::stats;

pub const MAX_USER_NAME_CHARS: usize = 64;
pub const DEFAULT_REQUESTS: u32 = 100;
pub const DEFAULT_CONCURRENCY: u32 = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("E_EMPTY_USERNAME: user name must contain a non-whitespace character")]
    EmptyUserName,
    #[error("user name exceeds {MAX_USER_NAME_CHARS} characters")]
    UserNameTooLong,
    #[error("app id {0} is not a version-4 UUID")]
    NotV4(Uuid),
    #[error("invalid url {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("message must be present iff method is POST (method {0})")]
    MessageMismatch(Method),
    #[error("{field} must be a finite value > 0, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field}: {reason}")]
    OutOfRange { field: &'static str, reason: String },
    #[error("E_NO_SAMPLES: no completed request to summarize")]
    NoSamples,
    #[error("measurement wall time must be > 0")]
    NonPositiveWallTime,
}

impl ModelError {
    /// The field a validation error refers to, used in diagnostics.
    pub fn field(&self) -> &'static str {
        match self {
            ModelError::EmptyUserName | ModelError::UserNameTooLong => "userName",
            ModelError::NotV4(_) => "appId",
            ModelError::InvalidUrl { .. } => "url",
            ModelError::MessageMismatch(_) => "message",
            ModelError::NotPositive { field, .. } | ModelError::OutOfRange { field, .. } => field,
            ModelError::NoSamples => "latencies",
            ModelError::NonPositiveWallTime => "wallTime",
        }
    }
}

/// Identity of the application under test and of the submitting user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ApplicationIdentity {
    pub app_id: Uuid,
    pub user_name: String,
}

impl ApplicationIdentity {
    /// Builds an identity with a freshly generated v4 id.
    pub fn generate(user_name: &str) -> Result<Self, ModelError> {
        let identity = ApplicationIdentity {
            app_id: Uuid::new_v4(),
            user_name: user_name.trim().to_string(),
        };
        identity.validate()?;
        Ok(identity)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.app_id.get_version_num() != 4 || self.app_id.get_variant() != uuid::Variant::RFC4122
        {
            return Err(ModelError::NotV4(self.app_id));
        }
        let trimmed = self.user_name.trim();
        if trimmed.is_empty() {
            return Err(ModelError::EmptyUserName);
        }
        if trimmed.chars().count() > MAX_USER_NAME_CHARS {
            return Err(ModelError::UserNameTooLong);
        }
        Ok(())
    }
}

/// Creates a new application identity for `user_name`.
pub fn new_app_identity(user_name: &str) -> Result<ApplicationIdentity, ModelError> {
    ApplicationIdentity::generate(user_name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    /// Case-insensitive; the canonical form is uppercase.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GET" => Ok(Method::Get),
            "POST" => Ok(Method::Post),
            other => Err(format!("unsupported method {other:?}, expected GET or POST")),
        }
    }
}

/// The request the load generator replays against the target.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestCase {
    pub url: String,
    pub method: Method,
    pub message: Option<String>,
}

/// Result of normalizing a URL that may lack a scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedUrl {
    pub url: String,
    /// `http://` was prepended.
    pub prefixed: bool,
}

impl TestCase {
    pub fn get(url: impl Into<String>) -> Self {
        TestCase {
            url: url.into(),
            method: Method::Get,
            message: None,
        }
    }

    pub fn post(url: impl Into<String>, message: impl Into<String>) -> Self {
        TestCase {
            url: url.into(),
            method: Method::Post,
            message: Some(message.into()),
        }
    }

    /// Trims `raw`, prefixes `http://` when no scheme is present, then checks
    /// the result is an absolute http/https URL.
    pub fn normalize_url(raw: &str) -> Result<NormalizedUrl, ModelError> {
        let trimmed = raw.trim();
        let (url, prefixed) = if has_scheme(trimmed) || trimmed.is_empty() {
            (trimmed.to_string(), false)
        } else {
            (format!("http://{trimmed}"), true)
        };
        check_http_url(&url)?;
        Ok(NormalizedUrl { url, prefixed })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_http_url(&self.url)?;
        match (self.method, &self.message) {
            (Method::Get, None) | (Method::Post, Some(_)) => Ok(()),
            (m, _) => Err(ModelError::MessageMismatch(m)),
        }
    }
}

/// A leading `name:` is a scheme unless a port follows it (`localhost:8080`).
fn has_scheme(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    scheme.starts_with(|c: char| c.is_ascii_alphabetic())
        && scheme
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.starts_with(|c: char| c.is_ascii_digit())
}

fn check_http_url(url: &str) -> Result<(), ModelError> {
    let bad = |reason: &str| ModelError::InvalidUrl {
        url: url.to_string(),
        reason: reason.to_string(),
    };
    let parsed = url::Url::parse(url).map_err(|e| bad(&e.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(bad("scheme must be http or https"));
    }
    if parsed.host_str().is_none_or(str::is_empty) {
        return Err(bad("missing host"));
    }
    Ok(())
}

fn check_positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NotPositive { field, value })
    }
}

/// Expected performance: response time (ms), transactions/s and bits/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceCriteria {
    pub response_ms: f64,
    pub tps: f64,
    pub bps: f64,
}

impl PerformanceCriteria {
    pub fn new(response_ms: f64, tps: f64, bps: f64) -> Result<Self, ModelError> {
        let c = PerformanceCriteria {
            response_ms,
            tps,
            bps,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_positive("response", self.response_ms)?;
        check_positive("tps", self.tps)?;
        check_positive("bps", self.bps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoadProfile {
    pub requests: u32,
    pub concurrency: u32,
}

impl Default for LoadProfile {
    fn default() -> Self {
        LoadProfile {
            requests: DEFAULT_REQUESTS,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }
}

impl LoadProfile {
    pub fn new(requests: u32, concurrency: u32) -> Result<Self, ModelError> {
        let p = LoadProfile {
            requests,
            concurrency,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.concurrency < 1 {
            return Err(ModelError::OutOfRange {
                field: "concurrency",
                reason: "must be at least 1".into(),
            });
        }
        if self.concurrency > self.requests {
            return Err(ModelError::OutOfRange {
                field: "concurrency",
                reason: format!(
                    "concurrency {} exceeds requests {}",
                    self.concurrency, self.requests
                ),
            });
        }
        Ok(())
    }
}

/// Parameters of the adaptive master-suite loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    pub start_concurrency: u32,
    pub growth_factor: f64,
    pub max_iterations: u32,
    pub requests_per_iteration: u32,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            start_concurrency: 1,
            growth_factor: 2.0,
            max_iterations: 20,
            requests_per_iteration: 50,
        }
    }
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let range = |field, reason: &str| ModelError::OutOfRange {
            field,
            reason: reason.to_string(),
        };
        if self.start_concurrency < 1 {
            return Err(range("startConcurrency", "must be at least 1"));
        }
        if !(self.growth_factor.is_finite() && self.growth_factor > 1.0) {
            return Err(range("growthFactor", "must be a finite value > 1"));
        }
        if self.max_iterations < 1 {
            return Err(range("maxIterations", "must be at least 1"));
        }
        if self.requests_per_iteration < 1 {
            return Err(range("requestsPerIteration", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMode {
    Critical,
    Master,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Critical => "critical",
            RunMode::Master => "master",
        }
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "critical" => Ok(RunMode::Critical),
            "master" => Ok(RunMode::Master),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Raw observations of one load run.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// One entry per request that received a complete response (any status).
    pub latencies_ms: Vec<f64>,
    pub bytes_received: u64,
    pub wall_time_s: f64,
    /// Completed requests with a non-2xx status.
    pub http_error_count: u64,
    /// Requests that never completed (connect failure, timeout, reset).
    pub transport_error_count: u64,
    pub started_at: DateTime<Utc>,
}

impl Measurement {
    pub fn error_count(&self) -> u64 {
        self.http_error_count + self.transport_error_count
    }

    pub fn attempted(&self) -> u64 {
        self.latencies_ms.len() as u64 + self.transport_error_count
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.wall_time_s.is_finite() && self.wall_time_s > 0.0) {
            return Err(ModelError::NonPositiveWallTime);
        }
        if self.http_error_count > self.latencies_ms.len() as u64 {
            return Err(ModelError::OutOfRange {
                field: "httpErrors",
                reason: "more HTTP errors than completed requests".into(),
            });
        }
        if let Some(bad) = self
            .latencies_ms
            .iter()
            .find(|l| !(l.is_finite() && **l >= 0.0))
        {
            return Err(ModelError::OutOfRange {
                field: "latencies",
                reason: format!("latency {bad} is negative or not finite"),
            });
        }
        Ok(())
    }
}

/// Observed statistics of one run, the counterpart of [`PerformanceCriteria`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSummary {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub observed_tps: f64,
    pub observed_bps: f64,
    pub completed: u64,
    pub errored: u64,
}

impl MeasurementSummary {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, v) in [
            ("mean", self.mean_ms),
            ("p50", self.p50_ms),
            ("p95", self.p95_ms),
            ("tps", self.observed_tps),
            ("bps", self.observed_bps),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::OutOfRange {
                    field,
                    reason: format!("{v} is negative or not finite"),
                });
            }
        }
        if self.p50_ms > self.p95_ms {
            return Err(ModelError::OutOfRange {
                field: "p50",
                reason: "p50 exceeds p95".into(),
            });
        }
        Ok(())
    }
}

/// Reduces a measurement to mean / nearest-rank percentiles and throughput.
pub fn summarize(m: &Measurement) -> Result<MeasurementSummary, ModelError> {
    if m.latencies_ms.is_empty() {
        return Err(ModelError::NoSamples);
    }
    if !(m.wall_time_s.is_finite() && m.wall_time_s > 0.0) {
        return Err(ModelError::NonPositiveWallTime);
    }
    let sorted = stats::sorted(&m.latencies_ms);
    let completed = sorted.len() as u64;
    Ok(MeasurementSummary {
        mean_ms: stats::mean(&sorted).expect("non-empty"),
        p50_ms: stats::nearest_rank(&sorted, 50).expect("non-empty"),
        p95_ms: stats::nearest_rank(&sorted, 95).expect("non-empty"),
        observed_tps: completed as f64 / m.wall_time_s,
        observed_bps: m.bytes_received as f64 * 8.0 / m.wall_time_s,
        completed,
        errored: m.error_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    Response,
    Tps,
    Bps,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 3] = [CriterionKind::Response, CriterionKind::Tps, CriterionKind::Bps];

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Response => "response",
            CriterionKind::Tps => "tps",
            CriterionKind::Bps => "bps",
        }
    }

    /// Response time is an upper bound; throughputs are lower bounds. Both inclusive.
    pub fn passes(self, expected: f64, observed: f64) -> bool {
        match self {
            CriterionKind::Response => observed <= expected,
            CriterionKind::Tps | CriterionKind::Bps => observed >= expected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionResult {
    pub expected: f64,
    pub observed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVerdict {
    pub response: CriterionResult,
    pub tps: CriterionResult,
    pub bps: CriterionResult,
    pub overall: bool,
}

impl TestVerdict {
    pub fn get(&self, kind: CriterionKind) -> &CriterionResult {
        match kind {
            CriterionKind::Response => &self.response,
            CriterionKind::Tps => &self.tps,
            CriterionKind::Bps => &self.bps,
        }
    }

    /// Checks pass flags against the comparison rules and `overall` against
    /// their conjunction.
    pub fn validate(&self) -> Result<(), ModelError> {
        for kind in CriterionKind::ALL {
            let c = self.get(kind);
            if c.pass != kind.passes(c.expected, c.observed) {
                return Err(ModelError::OutOfRange {
                    field: "pass",
                    reason: format!("{} pass flag contradicts its values", kind.name()),
                });
            }
        }
        if self.overall != (self.response.pass && self.tps.pass && self.bps.pass) {
            return Err(ModelError::OutOfRange {
                field: "overall",
                reason: "overall must equal the conjunction of criterion results".into(),
            });
        }
        Ok(())
    }
}

/// Judges a summary against criteria. Response time is compared with the mean.
pub fn evaluate(s: &MeasurementSummary, c: &PerformanceCriteria) -> TestVerdict {
    let judge = |kind: CriterionKind, expected: f64, observed: f64| CriterionResult {
        expected,
        observed,
        pass: kind.passes(expected, observed),
    };
    let response = judge(CriterionKind::Response, c.response_ms, s.mean_ms);
    let tps = judge(CriterionKind::Tps, c.tps, s.observed_tps);
    let bps = judge(CriterionKind::Bps, c.bps, s.observed_bps);
    TestVerdict {
        overall: response.pass && tps.pass && bps.pass,
        response,
        tps,
        bps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Grow,
    Bisect,
    Stop,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Grow => "GROW",
            Decision::Bisect => "BISECT",
            Decision::Stop => "STOP",
        }
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "GROW" => Ok(Decision::Grow),
            "BISECT" => Ok(Decision::Bisect),
            "STOP" => Ok(Decision::Stop),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

/// One iteration of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: u32,
    pub concurrency: u32,
    pub summary: MeasurementSummary,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub traces: Vec<TraceRecord>,
    /// Highest concurrency that met the criteria, 0 when none did.
    pub max_sustainable_concurrency: u32,
    /// Summary at `max_sustainable_concurrency`; `None` when nothing passed.
    pub final_summary: Option<MeasurementSummary>,
    /// `false` when the iteration budget ran out before the search converged.
    pub complete: bool,
}

impl AdaptiveOutcome {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, t) in self.traces.iter().enumerate() {
            if t.iteration as usize != i + 1 {
                return Err(ModelError::OutOfRange {
                    field: "iteration",
                    reason: format!("trace {} has iteration {}", i + 1, t.iteration),
                });
            }
            t.summary.validate()?;
        }
        if (self.max_sustainable_concurrency == 0) != self.final_summary.is_none() {
            return Err(ModelError::OutOfRange {
                field: "finalSummary",
                reason: "final summary must be present iff some level passed".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Done,
    Pending,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Done => "DONE",
            RunStatus::Pending => "PENDING",
            RunStatus::Failed => "FAILED",
        }
    }

    pub fn is_terminal(self) -> bool {
        !matches!(self, RunStatus::Pending)
    }
}

impl FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DONE" => Ok(RunStatus::Done),
            "PENDING" => Ok(RunStatus::Pending),
            "FAILED" => Ok(RunStatus::Failed),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}
