//! TFPaaS client: scaffolds projects, validates scripts, attaches the
//! project identity and submits tests to the service.
//!
//! Every command returns an [`Exit`] and writes results to `out`, errors and
//! diagnostics to `err`.

pub mod config;
pub mod watch;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use reqwest::StatusCode;
use tfpaas_core::conventions::{
    critical_template, load_config, read_identity, resolve_critical, scaffold_project,
    service_name, ProjectConfig, TFP_DIR,
};
use tfpaas_core::model::{
    CriterionKind, CriterionResult, LoadProfile, RunMode, RunStatus, TestVerdict,
};
use tfpaas_core::protocol::{
    decode_fault, decode_result, encode_request, ResultEnvelope, TestEnvelope, SOAP_CONTENT_TYPE,
};
use tfpaas_core::validator::{parse_script, TestScript};
use tfpaas_experiment::{emit_plot_files, run_modes_experiment, ExperimentConfig, ExperimentError};
use uuid::Uuid;

pub use config::{ClientConfig, ConfigError, DEFAULT_TIMEOUT, SERVICE_URL_ENV};
pub use watch::{check_file, FileCheck, WatchOptions, Watcher};

pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_secs(2);
pub const DEFAULT_POLL_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    PerfFail = 1,
    Validation = 2,
    MissingTest = 3,
    Transport = 4,
    Filesystem = 5,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<Exit> for std::process::ExitCode {
    fn from(e: Exit) -> Self {
        std::process::ExitCode::from(e.code())
    }
}

/// Where command output goes.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Console<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn warn(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.err, "{}", line.as_ref());
    }

    fn fail(&mut self, exit: Exit, line: impl AsRef<str>) -> Exit {
        self.warn(line);
        exit
    }
}

/// Settings shared by the submitting commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub service_url: Option<String>,
    /// Value of `TFPC_SERVICE_URL`, read by the caller.
    pub env_service_url: Option<String>,
    pub timeout: Option<Duration>,
    pub requests: Option<u32>,
    pub concurrency: Option<u32>,
}

impl RunOptions {
    fn config(&self, project: &ProjectConfig) -> Result<ClientConfig, ConfigError> {
        ClientConfig::resolve(
            self.service_url.as_deref(),
            self.env_service_url.as_deref(),
            project.service_url.as_deref(),
            self.timeout.unwrap_or(DEFAULT_TIMEOUT),
        )
    }

    /// Applies `--requests`/`--concurrency` on top of the script's profile.
    fn load(&self, script: Option<LoadProfile>) -> Result<Option<LoadProfile>, String> {
        if self.requests.is_none() && self.concurrency.is_none() {
            return Ok(script);
        }
        let base = script.unwrap_or_default();
        let p = LoadProfile {
            requests: self.requests.unwrap_or(base.requests),
            concurrency: self.concurrency.unwrap_or(base.concurrency),
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(Some(p))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CommError {
    #[error("E_TRANSPORT: {0}")]
    Transport(String),
    #[error("{0}")]
    Malformed(String),
    #[error("service rejected the request: {0}")]
    Rejected(String),
}

/// HTTP side of the client.
pub struct Communicator {
    client: reqwest::Client,
    base: String,
}

fn transport(e: reqwest::Error) -> CommError {
    let mut text = e.to_string();
    let mut source = std::error::Error::source(&e);
    while let Some(s) = source {
        text.push_str(": ");
        text.push_str(&s.to_string());
        source = s.source();
    }
    CommError::Transport(text)
}

impl Communicator {
    pub fn new(config: &ClientConfig) -> Communicator {
        Communicator {
            client: reqwest::Client::builder()
                .no_proxy()
                .timeout(config.timeout)
                .build()
                .expect("HTTP client configuration is static"),
            base: config.service_url.clone(),
        }
    }

    fn read_result(status: StatusCode, body: &str) -> Result<ResultEnvelope, CommError> {
        match decode_result(body) {
            Ok(d) => Ok(d.value),
            Err(e) => match decode_fault(body) {
                Ok(f) => Err(CommError::Rejected(f.reason)),
                Err(_) if !status.is_success() => {
                    let first = body.lines().next().unwrap_or_default();
                    Err(CommError::Rejected(format!("HTTP {status}: {first}")))
                }
                Err(_) => Err(CommError::Malformed(e.to_string())),
            },
        }
    }

    pub async fn submit(&self, env: &TestEnvelope) -> Result<ResultEnvelope, CommError> {
        let body = encode_request(env).map_err(|e| CommError::Malformed(e.to_string()))?;
        let resp = self
            .client
            .post(format!("{}/tfps", self.base))
            .header(reqwest::header::CONTENT_TYPE, SOAP_CONTENT_TYPE)
            .body(body)
            .send()
            .await
            .map_err(transport)?;
        let status = resp.status();
        let text = resp.text().await.map_err(transport)?;
        Self::read_result(status, &text)
    }

    pub async fn fetch(&self, task_id: Uuid) -> Result<ResultEnvelope, CommError> {
        let resp = self
            .client
            .get(format!("{}/results/{}.xml", self.base, task_id.hyphenated()))
            .send()
            .await
            .map_err(transport)?;
        let status = resp.status();
        let text = resp.text().await.map_err(transport)?;
        Self::read_result(status, &text)
    }
}

fn trim_num(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// `response: PASS 2.1ms <= 3ms`
pub fn criterion_line(kind: CriterionKind, c: &CriterionResult) -> String {
    let (unit, ok, not_ok) = match kind {
        CriterionKind::Response => ("ms", "<=", ">"),
        CriterionKind::Tps => (" req/s", ">=", "<"),
        CriterionKind::Bps => (" bit/s", ">=", "<"),
    };
    format!(
        "{}: {} {}{unit} {} {}{unit}",
        kind.name(),
        if c.pass { "PASS" } else { "FAIL" },
        trim_num(c.observed),
        if c.pass { ok } else { not_ok },
        trim_num(c.expected),
    )
}

pub fn verdict_lines(v: &TestVerdict) -> Vec<String> {
    let mut lines: Vec<String> = CriterionKind::ALL
        .iter()
        .map(|k| criterion_line(*k, v.get(*k)))
        .collect();
    lines.push(format!("overall: {}", if v.overall { "PASS" } else { "FAIL" }));
    lines
}

/// Prints a terminal result and maps it to an exit code.
fn report_result(con: &mut Console<'_>, r: &ResultEnvelope) -> Exit {
    let exit = match (r.status, &r.verdict) {
        (RunStatus::Done, Some(v)) => {
            for line in verdict_lines(v) {
                con.say(line);
            }
            if let Some(o) = &r.adaptive {
                con.say(format!(
                    "max sustainable concurrency: {}{}",
                    o.max_sustainable_concurrency,
                    if o.complete { "" } else { " (search incomplete)" }
                ));
                con.say(format!("trace: {} iterations", o.traces.len()));
            }
            if v.overall {
                Exit::Pass
            } else {
                Exit::PerfFail
            }
        }
        (RunStatus::Done, None) => con.fail(Exit::Transport, "E_MALFORMED_XML: DONE result without a verdict"),
        (status, _) => {
            con.say(format!("status: {}", status.as_str()));
            con.warn(r.error.as_deref().unwrap_or("run failed without a reason"));
            Exit::Transport
        }
    };
    con.say(format!("detail: {}", r.detail_url));
    exit
}

fn read_script(con: &mut Console<'_>, path: &Path) -> Result<TestScript, Exit> {
    let text = fs::read_to_string(path)
        .map_err(|e| con.fail(Exit::Filesystem, format!("E_IO: {}: {e}", path.display())))?;
    match parse_script(&text) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                con.warn(format!("{}: {w}", path.display()));
            }
            Ok(parsed.script)
        }
        Err(invalid) => {
            for d in &invalid.0 {
                con.warn(format!("{}: {d}", path.display()));
            }
            Err(con.fail(Exit::Validation, format!("{invalid}: {} not submitted", path.display())))
        }
    }
}

fn project(con: &mut Console<'_>, root: &Path) -> Result<ProjectConfig, Exit> {
    let cfg = load_config(root).map_err(|e| con.fail(Exit::Filesystem, e.to_string()))?;
    for w in &cfg.warnings {
        con.warn(w);
    }
    Ok(cfg)
}

/// Creates the project template and prints the created paths.
pub fn cmd_init(con: &mut Console<'_>, root: &Path, user_name: &str) -> Exit {
    match scaffold_project(root, user_name) {
        Ok(layout) => {
            for p in [
                layout.resolve(TFP_DIR),
                layout.critical_path(),
                layout.master_file(),
                layout.app_id_file(),
            ] {
                con.say(p.display().to_string());
            }
            Exit::Pass
        }
        Err(e) => con.fail(Exit::Filesystem, e.to_string()),
    }
}

/// Writes the critical-test template for `service_file`. Never overwrites.
pub fn cmd_create_test(con: &mut Console<'_>, root: &Path, service_file: &Path) -> Exit {
    if !root.join(TFP_DIR).is_dir() {
        return con.fail(
            Exit::Filesystem,
            format!("E_NOT_SCAFFOLDED: {} has no {TFP_DIR} directory; run tfpc init", root.display()),
        );
    }
    let Ok(cfg) = project(con, root) else {
        return Exit::Filesystem;
    };
    let (name, path) = match service_name(service_file)
        .and_then(|n| Ok((n, resolve_critical(service_file, &cfg.layout)?)))
    {
        Ok(v) => v,
        Err(e) => return con.fail(Exit::Filesystem, e.to_string()),
    };
    if let Some(dir) = path.parent() {
        if let Err(e) = fs::create_dir_all(dir) {
            return con.fail(Exit::Filesystem, format!("E_IO: {}: {e}", dir.display()));
        }
    }
    let written = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&path)
        .and_then(|mut f| f.write_all(critical_template(&name).as_bytes()));
    match written {
        Ok(()) => {
            con.say(path.display().to_string());
            Exit::Pass
        }
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => con.fail(
            Exit::Filesystem,
            format!("E_EXISTS: {} already exists, not overwritten", path.display()),
        ),
        Err(e) => con.fail(Exit::Filesystem, format!("E_IO: {}: {e}", path.display())),
    }
}

/// One-shot validation of every path. Exit 0 iff no file has an ERROR.
pub fn cmd_validate(con: &mut Console<'_>, paths: &[PathBuf]) -> Exit {
    let mut errors = 0;
    for p in paths {
        let check = check_file(p);
        errors += check.errors();
        for line in check.lines(p) {
            con.warn(line);
        }
    }
    if errors == 0 {
        Exit::Pass
    } else {
        Exit::Validation
    }
}

/// Re-validates on every content change until `stop` is set.
pub fn cmd_watch(con: &mut Console<'_>, paths: &[PathBuf], opts: WatchOptions, stop: &AtomicBool) -> Exit {
    let mut w = Watcher::new(paths, opts.settle);
    w.run(opts, stop, |path, check| {
        for line in check.lines(path) {
            con.warn(line);
        }
        con.say(format!(
            "{}: {} error(s), {} warning(s)",
            path.display(),
            check.errors(),
            check.warnings()
        ));
    });
    Exit::Pass
}

struct Prepared {
    config: ClientConfig,
    envelope: TestEnvelope,
}

fn prepare(
    con: &mut Console<'_>,
    cfg: &ProjectConfig,
    script_path: &Path,
    mode: RunMode,
    opts: &RunOptions,
) -> Result<Prepared, Exit> {
    let script = read_script(con, script_path)?;
    let load = opts
        .load(script.load)
        .map_err(|e| con.fail(Exit::Validation, e))?;
    let identity = read_identity(&cfg.layout).map_err(|e| con.fail(Exit::Filesystem, e.to_string()))?;
    let config = opts
        .config(cfg)
        .map_err(|e| con.fail(Exit::Transport, e.to_string()))?;
    let adaptive = match mode {
        RunMode::Master => Some(script.adaptive.unwrap_or_default()),
        RunMode::Critical => {
            if script.adaptive.is_some() {
                con.warn(format!(
                    "{}: adaptive block ignored for a critical run",
                    script_path.display()
                ));
            }
            None
        }
    };
    Ok(Prepared {
        config,
        envelope: TestEnvelope {
            application: identity,
            case: script.case,
            criteria: script.criteria,
            load,
            mode,
            adaptive,
        },
    })
}

/// Runs the critical test of `service_file` and waits for the verdict.
pub async fn cmd_run_critical(con: &mut Console<'_>, root: &Path, service_file: &Path, opts: &RunOptions) -> Exit {
    let cfg = match project(con, root) {
        Ok(c) => c,
        Err(e) => return e,
    };
    let path = match resolve_critical(service_file, &cfg.layout) {
        Ok(p) => p,
        Err(e) => return con.fail(Exit::Filesystem, e.to_string()),
    };
    if !path.is_file() {
        return con.fail(
            Exit::MissingTest,
            format!(
                "E_NO_TEST_CASE: no performance test for {}; expected {} (tfpc create-test)",
                service_file.display(),
                path.display()
            ),
        );
    }
    let p = match prepare(con, &cfg, &path, RunMode::Critical, opts) {
        Ok(p) => p,
        Err(e) => return e,
    };
    match Communicator::new(&p.config).submit(&p.envelope).await {
        Ok(r) => report_result(con, &r),
        Err(e) => con.fail(Exit::Transport, e.to_string()),
    }
}

/// Submits the master suite and polls until it leaves PENDING.
pub async fn cmd_run_master(
    con: &mut Console<'_>,
    root: &Path,
    opts: &RunOptions,
    poll_interval: Duration,
    poll_timeout: Duration,
) -> Exit {
    let cfg = match project(con, root) {
        Ok(c) => c,
        Err(e) => return e,
    };
    let path = cfg.layout.master_file();
    if !path.is_file() {
        return con.fail(
            Exit::MissingTest,
            format!("E_NO_MASTER: no master test suite at {}", path.display()),
        );
    }
    let p = match prepare(con, &cfg, &path, RunMode::Master, opts) {
        Ok(p) => p,
        Err(e) => return e,
    };
    let comm = Communicator::new(&p.config);
    let mut r = match comm.submit(&p.envelope).await {
        Ok(r) => r,
        Err(e) => return con.fail(Exit::Transport, e.to_string()),
    };
    if r.status == RunStatus::Pending {
        con.say(format!("submitted {}, waiting for the result", r.task_id.hyphenated()));
    }
    let deadline = Instant::now() + poll_timeout;
    while r.status == RunStatus::Pending {
        if Instant::now() >= deadline {
            con.say(format!("detail: {}", r.detail_url));
            return con.fail(
                Exit::Transport,
                format!(
                    "E_POLL_TIMEOUT: task {} still PENDING after {}s",
                    r.task_id.hyphenated(),
                    poll_timeout.as_secs_f64()
                ),
            );
        }
        tokio::time::sleep(poll_interval.min(deadline.saturating_duration_since(Instant::now()))).await;
        r = match comm.fetch(r.task_id).await {
            Ok(next) => next,
            Err(e) => return con.fail(Exit::Transport, e.to_string()),
        };
    }
    report_result(con, &r)
}

/// Runs the validation-placement experiment and writes the plot files.
pub async fn cmd_experiment(con: &mut Console<'_>, cfg: &ExperimentConfig, out_dir: &Path) -> Exit {
    let exit_of = |e: &ExperimentError| match e {
        ExperimentError::Config(_) | ExperimentError::Rejected(_) => Exit::Validation,
        ExperimentError::Transport(_) => Exit::Transport,
        ExperimentError::PortInUse(_) | ExperimentError::Io { .. } => Exit::Filesystem,
    };
    let rows = match run_modes_experiment(cfg).await {
        Ok(r) => r,
        Err(e) => return con.fail(exit_of(&e), e.to_string()),
    };
    con.say(format!("{:>10} {:<18} {:>14}", "requests", "mode", "total ms"));
    for r in &rows {
        con.say(format!("{:>10} {:<18} {:>14.3}", r.n_requests, r.mode.as_str(), r.total_time_ms));
    }
    match emit_plot_files(&rows, out_dir) {
        Ok(paths) => {
            for p in paths {
                con.say(p.display().to_string());
            }
            Exit::Pass
        }
        Err(e) => con.fail(exit_of(&e), e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tfpaas_core::model::CriterionResult;

    #[test]
    fn criterion_lines() {
        let c = |expected, observed, pass| CriterionResult {
            expected,
            observed,
            pass,
        };
        assert_eq!(
            criterion_line(CriterionKind::Response, &c(3.0, 2.1, true)),
            "response: PASS 2.1ms <= 3ms"
        );
        assert_eq!(
            criterion_line(CriterionKind::Response, &c(5.0, 20.4567, false)),
            "response: FAIL 20.457ms > 5ms"
        );
        assert_eq!(
            criterion_line(CriterionKind::Tps, &c(1.0, 0.0, false)),
            "tps: FAIL 0 req/s < 1 req/s"
        );
        assert_eq!(
            criterion_line(CriterionKind::Bps, &c(8.0, 8.0, true)),
            "bps: PASS 8 bit/s >= 8 bit/s"
        );
    }

    #[test]
    fn load_overrides() {
        let o = RunOptions::default();
        assert_eq!(o.load(None), Ok(None));
        let o = RunOptions {
            concurrency: Some(4),
            ..RunOptions::default()
        };
        assert_eq!(
            o.load(None).unwrap(),
            Some(LoadProfile {
                requests: tfpaas_core::model::DEFAULT_REQUESTS,
                concurrency: 4
            })
        );
        let o = RunOptions {
            requests: Some(2),
            concurrency: Some(5),
            ..RunOptions::default()
        };
        assert!(o.load(None).is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            Exit::Pass,
            Exit::PerfFail,
            Exit::Validation,
            Exit::MissingTest,
            Exit::Transport,
            Exit::Filesystem,
        ];
        let codes: Vec<u8> = all.iter().map(|e| e.code()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3, 4, 5]);
    }
}
