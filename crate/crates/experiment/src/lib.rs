//! Compares two ways of placing script validation: on the service (CLOUD)
//! or in the client before sending (PLUGIN).
//!
//! Both stub services sleep for the non-validation work. The CLOUD stub also
//! sleeps for validation; the PLUGIN client validates locally, which costs
//! next to nothing, so the service only pays the remaining work. Each trial
//! sends `n` envelopes one after another and times the whole series.

use std::fmt;
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use tfpaas_core::model::ApplicationIdentity;
use tfpaas_core::protocol::{decode_request, encode_request, TestEnvelope};
use tfpaas_core::validator::{parse_script, Diagnostic};
use tokio::sync::oneshot;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("E_CONFIG: {0}")]
    Config(String),
    #[error("E_PORT_IN_USE: {0}")]
    PortInUse(io::Error),
    #[error("E_IO: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("E_TRANSPORT: {0}")]
    Transport(String),
    #[error("E_INVALID_SCRIPT: {} error(s)", .0.len())]
    Rejected(Vec<Diagnostic>),
}

impl ExperimentError {
    pub fn code(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) => "E_CONFIG",
            ExperimentError::PortInUse(_) => "E_PORT_IN_USE",
            ExperimentError::Io { .. } => "E_IO",
            ExperimentError::Transport(_) => "E_TRANSPORT",
            ExperimentError::Rejected(_) => "E_INVALID_SCRIPT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValidationMode {
    Cloud,
    Plugin,
}

impl ValidationMode {
    pub const ALL: [ValidationMode; 2] = [ValidationMode::Cloud, ValidationMode::Plugin];

    pub fn as_str(self) -> &'static str {
        match self {
            ValidationMode::Cloud => "CLOUD_VALIDATION",
            ValidationMode::Plugin => "PLUGIN_VALIDATION",
        }
    }

    fn file_stem(self) -> &'static str {
        match self {
            ValidationMode::Cloud => "cloud",
            ValidationMode::Plugin => "plugin",
        }
    }
}

impl fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub request_counts: Vec<u32>,
    pub validation_delay_ms: u64,
    pub rest_delay_ms: u64,
    pub repetitions: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            request_counts: (1..=50).step_by(5).collect(),
            validation_delay_ms: 50,
            rest_delay_ms: 10,
            repetitions: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.request_counts.is_empty() {
            return Err(ExperimentError::Config("no request counts".into()));
        }
        if self.request_counts.contains(&0) {
            return Err(ExperimentError::Config("request counts must be positive".into()));
        }
        if self.request_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::Config(
                "request counts must be strictly increasing".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetitions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub n_requests: u32,
    pub mode: ValidationMode,
    /// Median over repetitions of the time to serve all `n_requests`.
    pub total_time_ms: f64,
}

struct StubState {
    mode: ValidationMode,
    validation_delay: Duration,
    rest_delay: Duration,
    received: AtomicU64,
}

/// A stand-in for the service with injected processing costs.
pub struct StubService {
    addr: SocketAddr,
    state: Arc<StubState>,
    shutdown: Option<oneshot::Sender<()>>,
}

async fn handle(State(s): State<Arc<StubState>>, body: String) -> (StatusCode, String) {
    s.received.fetch_add(1, Ordering::SeqCst);
    if s.mode == ValidationMode::Cloud {
        // Server-side validation: real decoding plus the injected cost.
        let ok = decode_request(&body).is_ok();
        tokio::time::sleep(s.validation_delay).await;
        if !ok {
            return (StatusCode::BAD_REQUEST, "E_INVALID_SCRIPT".into());
        }
    }
    tokio::time::sleep(s.rest_delay).await;
    (StatusCode::OK, "ok".into())
}

impl StubService {
    pub async fn start(
        mode: ValidationMode,
        validation_delay: Duration,
        rest_delay: Duration,
    ) -> Result<StubService, ExperimentError> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
            .await
            .map_err(ExperimentError::PortInUse)?;
        let addr = listener.local_addr().map_err(ExperimentError::PortInUse)?;
        let state = Arc::new(StubState {
            mode,
            validation_delay,
            rest_delay,
            received: AtomicU64::new(0),
        });
        let app = Router::new()
            .route("/tfps", post(handle))
            .with_state(state.clone());
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(StubService {
            addr,
            state,
            shutdown: Some(tx),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}/tfps", self.addr)
    }

    pub fn received(&self) -> u64 {
        self.state.received.load(Ordering::SeqCst)
    }

    pub fn mode(&self) -> ValidationMode {
        self.state.mode
    }
}

impl Drop for StubService {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Client side of one mode. In PLUGIN mode scripts with errors are refused
/// before anything is sent.
pub struct Submitter {
    client: reqwest::Client,
    identity: ApplicationIdentity,
}

impl Default for Submitter {
    fn default() -> Self {
        Submitter {
            client: reqwest::Client::builder()
                .no_proxy()
                .build()
                .expect("HTTP client configuration is static"),
            identity: ApplicationIdentity::generate("experiment").expect("static user name"),
        }
    }
}

impl Submitter {
    fn envelope(&self, script: &str) -> Result<String, ExperimentError> {
        let parsed = parse_script(script).map_err(|e| ExperimentError::Rejected(e.0))?;
        let s = parsed.script;
        let env = TestEnvelope {
            load: s.load,
            ..TestEnvelope::critical(self.identity.clone(), s.case, s.criteria)
        };
        encode_request(&env).map_err(|e| ExperimentError::Transport(e.to_string()))
    }

    pub async fn submit(&self, stub: &StubService, script: &str) -> Result<(), ExperimentError> {
        let body = match stub.mode() {
            ValidationMode::Plugin => self.envelope(script)?,
            // The service validates; the client forwards the script as is.
            ValidationMode::Cloud => self
                .envelope(script)
                .unwrap_or_else(|_| script.to_string()),
        };
        let resp = self
            .client
            .post(stub.url())
            .body(body)
            .send()
            .await
            .map_err(|e| ExperimentError::Transport(e.to_string()))?;
        let status = resp.status();
        resp.bytes()
            .await
            .map_err(|e| ExperimentError::Transport(e.to_string()))?;
        if status.is_success() {
            Ok(())
        } else {
            Err(ExperimentError::Transport(format!("stub replied {status}")))
        }
    }

    /// Sends `n` submissions in series and returns the elapsed wall time.
    pub async fn trial(&self, stub: &StubService, script: &str, n: u32) -> Result<Duration, ExperimentError> {
        let start = Instant::now();
        for _ in 0..n {
            self.submit(stub, script).await?;
        }
        Ok(start.elapsed())
    }
}

pub const EXPERIMENT_SCRIPT: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<testScript xmlns="urn:tfpaas:script:v1">
  <case>
    <url>http://localhost:8080/BookSearch</url>
    <method>GET</method>
  </case>
  <criteria>
    <response>1000</response>
    <tps>1</tps>
    <bps>8</bps>
  </criteria>
</testScript>
"#;

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

async fn run_mode(
    cfg: &ExperimentConfig,
    mode: ValidationMode,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let stub = StubService::start(
        mode,
        Duration::from_millis(cfg.validation_delay_ms),
        Duration::from_millis(cfg.rest_delay_ms),
    )
    .await?;
    let submitter = Submitter::default();
    // Warm the connection pool so the first trial does not pay the handshake.
    submitter.submit(&stub, EXPERIMENT_SCRIPT).await?;
    let mut rows = Vec::with_capacity(cfg.request_counts.len());
    for &n in &cfg.request_counts {
        let mut times = Vec::with_capacity(cfg.repetitions as usize);
        for _ in 0..cfg.repetitions {
            let t = submitter.trial(&stub, EXPERIMENT_SCRIPT, n).await?;
            times.push(t.as_secs_f64() * 1000.0);
        }
        rows.push(ExperimentRow {
            n_requests: n,
            mode,
            total_time_ms: median(&mut times),
        });
    }
    Ok(rows)
}

/// Runs both modes side by side on separate stubs. Rows come back grouped
/// by mode (CLOUD first), each group ascending in `n_requests`.
pub async fn run_modes_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, ExperimentError> {
    cfg.validate()?;
    let (cloud, plugin) = tokio::join!(
        run_mode(cfg, ValidationMode::Cloud),
        run_mode(cfg, ValidationMode::Plugin)
    );
    let mut rows = cloud?;
    rows.extend(plugin?);
    Ok(rows)
}

/// Writes `cloud.dat`, `plugin.dat` (`<n> <ms>` per line, ascending n) and a
/// gnuplot script plotting both.
pub fn emit_plot_files(rows: &[ExperimentRow], out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Config("no rows to plot".into()));
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    for mode in ValidationMode::ALL {
        let mut mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.mode == mode).collect();
        mine.sort_by(|a, b| {
            a.n_requests
                .cmp(&b.n_requests)
                .then(a.total_time_ms.total_cmp(&b.total_time_ms))
        });
        let text: String = mine
            .iter()
            .map(|r| format!("{} {:.3}\n", r.n_requests, r.total_time_ms))
            .collect();
        let path = out_dir.join(format!("{}.dat", mode.file_stem()));
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    let script = "set terminal pngcairo size 800,500\n\
                  set output 'response_time.png'\n\
                  set xlabel 'Number of requests'\n\
                  set ylabel 'Response time (ms)'\n\
                  set key top left\n\
                  plot 'cloud.dat' using 1:2 with linespoints title 'Validation in the service', \\\n\
                  \x20    'plugin.dat' using 1:2 with linespoints title 'Validation in the client'\n";
    let path = out_dir.join("response_time.gp");
    fs::write(&path, script).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&mut []), 0.0);
    }

    #[test]
    fn config_checks() {
        assert!(ExperimentConfig::default().validate().is_ok());
        assert_eq!(ExperimentConfig::default().request_counts[..3], [1, 6, 11]);
        let bad = |counts: Vec<u32>, reps| ExperimentConfig {
            request_counts: counts,
            repetitions: reps,
            ..ExperimentConfig::default()
        };
        assert!(bad(vec![], 1).validate().is_err());
        assert!(bad(vec![5, 5], 1).validate().is_err());
        assert!(bad(vec![0, 5], 1).validate().is_err());
        assert!(bad(vec![5], 0).validate().is_err());
    }

    #[test]
    fn experiment_script_is_valid() {
        assert!(tfpaas_core::validator::validate_script(EXPERIMENT_SCRIPT).is_empty());
    }
}
