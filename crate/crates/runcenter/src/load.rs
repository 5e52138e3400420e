//! HTTP load generation for one instruction set.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::Utc;
use tfpaas_core::model::{LoadProfile, Measurement, Method, TestCase};
use tokio::task::JoinSet;

use crate::RunError;

pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

/// Issues requests against a target and records what came back.
#[derive(Debug, Clone)]
pub struct LoadGenerator {
    client: reqwest::Client,
    request_timeout: Duration,
}

impl Default for LoadGenerator {
    fn default() -> Self {
        LoadGenerator::new(DEFAULT_REQUEST_TIMEOUT)
    }
}

#[derive(Debug, Default)]
struct Sample {
    latency_ms: Option<f64>,
    bytes: u64,
    http_error: bool,
    connect_failure: bool,
    last_error: Option<String>,
    finished: Option<Instant>,
}

impl LoadGenerator {
    pub fn new(request_timeout: Duration) -> Self {
        let client = reqwest::Client::builder()
            .no_proxy()
            .http1_only()
            .pool_max_idle_per_host(1024)
            .build()
            .expect("HTTP client configuration is static");
        LoadGenerator {
            client,
            request_timeout,
        }
    }

    /// Issues exactly `profile.requests` requests with at most
    /// `profile.concurrency` in flight.
    ///
    /// Latency runs from the start of the send to the last body byte. Non-2xx
    /// replies keep their latency and count as HTTP errors; requests that never
    /// complete count as transport errors.
    pub async fn execute(&self, case: &TestCase, profile: &LoadProfile) -> Result<Measurement, RunError> {
        profile
            .validate()
            .map_err(|e| RunError::Invalid(e.to_string()))?;
        case.validate()
            .map_err(|e| RunError::Invalid(e.to_string()))?;
        let next = Arc::new(AtomicU32::new(0));
        let started_at = Utc::now();
        let first_send = Instant::now();
        let mut workers = JoinSet::new();
        for _ in 0..profile.concurrency {
            let next = next.clone();
            let gen = self.clone();
            let case = case.clone();
            let total = profile.requests;
            workers.spawn(async move {
                let mut samples = Vec::new();
                while next.fetch_add(1, Ordering::SeqCst) < total {
                    samples.push(gen.one(&case).await);
                }
                samples
            });
        }
        let mut samples = Vec::with_capacity(profile.requests as usize);
        while let Some(joined) = workers.join_next().await {
            samples.extend(joined.map_err(|e| RunError::Internal(e.to_string()))?);
        }
        debug_assert_eq!(samples.len(), profile.requests as usize);

        if samples.iter().all(|s| s.connect_failure) {
            let reason = samples
                .iter()
                .find_map(|s| s.last_error.clone())
                .unwrap_or_default();
            return Err(RunError::TargetUnresolvable {
                url: case.url.clone(),
                reason,
            });
        }
        let last = samples
            .iter()
            .filter_map(|s| s.finished)
            .max()
            .unwrap_or_else(Instant::now);
        let wall = last.duration_since(first_send).as_secs_f64();
        let mut m = Measurement {
            latencies_ms: Vec::with_capacity(samples.len()),
            bytes_received: 0,
            // Guard against a zero reading from a coarse clock.
            wall_time_s: wall.max(1e-9),
            http_error_count: 0,
            transport_error_count: 0,
            started_at,
        };
        for s in samples {
            match s.latency_ms {
                Some(l) => {
                    m.latencies_ms.push(l);
                    m.bytes_received += s.bytes;
                    m.http_error_count += u64::from(s.http_error);
                }
                None => m.transport_error_count += 1,
            }
        }
        Ok(m)
    }

    async fn one(&self, case: &TestCase) -> Sample {
        let req = match case.method {
            Method::Get => self.client.get(&case.url),
            Method::Post => self
                .client
                .post(&case.url)
                .body(case.message.clone().unwrap_or_default()),
        }
        .timeout(self.request_timeout);
        let start = Instant::now();
        let outcome = async {
            let resp = req.send().await?;
            let status = resp.status();
            let body = resp.bytes().await?;
            Ok::<_, reqwest::Error>((status, body.len() as u64))
        }
        .await;
        let finished = Instant::now();
        match outcome {
            Ok((status, bytes)) => Sample {
                latency_ms: Some(finished.duration_since(start).as_secs_f64() * 1000.0),
                bytes,
                http_error: !status.is_success(),
                finished: Some(finished),
                ..Sample::default()
            },
            Err(e) => Sample {
                connect_failure: e.is_connect() || e.is_builder(),
                last_error: Some(error_chain(&e)),
                finished: Some(finished),
                ..Sample::default()
            },
        }
    }
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut text = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        text.push_str(": ");
        text.push_str(&s.to_string());
        source = s.source();
    }
    text
}
