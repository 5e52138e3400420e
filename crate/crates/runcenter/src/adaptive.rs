//! Adaptive master-suite loop: grow the concurrency geometrically while the
//! criteria hold, then bisect between the last passing and first failing
//! level.

use std::future::Future;

use tfpaas_core::model::{
    evaluate, summarize, AdaptiveOutcome, AdaptiveParams, Decision, LoadProfile,
    MeasurementSummary, PerformanceCriteria, TestCase, TraceRecord,
};

use crate::load::LoadGenerator;
use crate::RunError;

/// Runs one load level and reports its summary.
pub trait Probe {
    fn probe(
        &mut self,
        concurrency: u32,
        requests: u32,
    ) -> impl Future<Output = Result<MeasurementSummary, RunError>> + Send;
}

/// Summary of a level at which no request completed. Zero throughput fails
/// every positive tps criterion.
pub fn empty_summary(errored: u64) -> MeasurementSummary {
    MeasurementSummary {
        mean_ms: 0.0,
        p50_ms: 0.0,
        p95_ms: 0.0,
        observed_tps: 0.0,
        observed_bps: 0.0,
        completed: 0,
        errored,
    }
}

/// Probes a real target over HTTP.
pub struct HttpProbe<'a> {
    pub generator: &'a LoadGenerator,
    pub case: &'a TestCase,
}

impl Probe for HttpProbe<'_> {
    async fn probe(&mut self, concurrency: u32, requests: u32) -> Result<MeasurementSummary, RunError> {
        let profile = LoadProfile {
            requests,
            concurrency,
        };
        let m = self.generator.execute(self.case, &profile).await?;
        Ok(summarize(&m).unwrap_or_else(|_| empty_summary(m.error_count())))
    }
}

/// Closed-loop model of a target whose latency depends only on concurrency:
/// `c` clients each wait `latency(c)` per request.
pub struct SyntheticProbe<L> {
    pub latency_ms: L,
    pub bytes_per_response: u64,
    pub calls: Vec<u32>,
}

impl<L: Fn(u32) -> f64> SyntheticProbe<L> {
    pub fn new(latency_ms: L) -> Self {
        SyntheticProbe {
            latency_ms,
            bytes_per_response: 1024,
            calls: Vec::new(),
        }
    }

    pub fn summary(&self, concurrency: u32, requests: u32) -> MeasurementSummary {
        let l = (self.latency_ms)(concurrency);
        let tps = f64::from(concurrency) * 1000.0 / l;
        MeasurementSummary {
            mean_ms: l,
            p50_ms: l,
            p95_ms: l,
            observed_tps: tps,
            observed_bps: tps * self.bytes_per_response as f64 * 8.0,
            completed: u64::from(requests),
            errored: 0,
        }
    }
}

impl<L: Fn(u32) -> f64 + Send> Probe for SyntheticProbe<L> {
    fn probe(
        &mut self,
        concurrency: u32,
        requests: u32,
    ) -> impl Future<Output = Result<MeasurementSummary, RunError>> + Send {
        self.calls.push(concurrency);
        let s = self.summary(concurrency, requests);
        std::future::ready(Ok(s))
    }
}

/// No concurrency limit beyond `u32::MAX`.
pub const UNCAPPED: u32 = u32::MAX;

/// Search state. Feeding it pass/fail observations yields the decisions and
/// levels of the loop, so traces can be replayed without a target.
#[derive(Debug, Clone)]
pub struct Estimator {
    growth_factor: f64,
    cap: u32,
    current: u32,
    last_pass: Option<u32>,
    first_fail: Option<u32>,
}

impl Estimator {
    /// Growth never goes past `cap`; a search still passing there stops.
    pub fn new(params: &AdaptiveParams, cap: u32) -> Self {
        let cap = cap.max(1);
        Estimator {
            growth_factor: params.growth_factor,
            cap,
            current: params.start_concurrency.min(cap),
            last_pass: None,
            first_fail: None,
        }
    }

    /// True once some level has failed, i.e. the answer is bracketed.
    pub fn bracketed(&self) -> bool {
        self.first_fail.is_some()
    }

    pub fn current(&self) -> u32 {
        self.current
    }

    /// Records the verdict at the current level and moves to the next one.
    pub fn observe(&mut self, pass: bool) -> Decision {
        let c = self.current;
        if pass {
            self.last_pass = Some(self.last_pass.map_or(c, |p| p.max(c)));
        } else {
            self.first_fail = Some(self.first_fail.map_or(c, |f| f.min(c)));
        }
        match (self.last_pass, self.first_fail) {
            (_, None) => {
                let grown = (f64::from(c) * self.growth_factor).ceil();
                self.current = if grown >= f64::from(self.cap) {
                    self.cap
                } else {
                    (grown as u32).max(c.saturating_add(1)).min(self.cap)
                };
                if self.current == c {
                    Decision::Stop
                } else {
                    Decision::Grow
                }
            }
            (None, Some(_)) => Decision::Stop,
            (Some(lo), Some(hi)) if hi - lo <= 1 => Decision::Stop,
            (Some(lo), Some(hi)) => {
                self.current = lo + (hi - lo) / 2;
                Decision::Bisect
            }
        }
    }

    pub fn max_sustainable(&self) -> u32 {
        self.last_pass.unwrap_or(0)
    }
}

/// Runs the loop until it converges or `max_iterations` is spent. Each level
/// issues `max(requests_per_iteration, concurrency)` requests so every worker
/// gets at least one. The outcome is complete only when a failing level
/// bounds the answer; stopping at `cap` while still passing is incomplete.
pub async fn adaptive_master<P: Probe>(
    probe: &mut P,
    criteria: &PerformanceCriteria,
    params: &AdaptiveParams,
    cap: u32,
) -> Result<AdaptiveOutcome, RunError> {
    params
        .validate()
        .map_err(|e| RunError::Invalid(e.to_string()))?;
    let mut est = Estimator::new(params, cap);
    let mut traces: Vec<TraceRecord> = Vec::new();
    let mut best: Option<(u32, MeasurementSummary)> = None;
    let mut complete = false;
    for iteration in 1..=params.max_iterations {
        let c = est.current();
        let summary = probe
            .probe(c, params.requests_per_iteration.max(c))
            .await?;
        let pass = evaluate(&summary, criteria).overall;
        if pass && best.is_none_or(|(b, _)| c > b) {
            best = Some((c, summary));
        }
        let decision = est.observe(pass);
        traces.push(TraceRecord {
            iteration,
            concurrency: c,
            summary,
            decision,
        });
        if decision == Decision::Stop {
            complete = est.bracketed();
            break;
        }
    }
    Ok(AdaptiveOutcome {
        traces,
        max_sustainable_concurrency: best.map_or(0, |(c, _)| c),
        final_summary: best.map(|(_, s)| s),
        complete,
    })
}

/// Fails with `E_ITERATION_BUDGET` when the search did not converge, carrying
/// the best-so-far outcome.
pub fn ensure_complete(outcome: AdaptiveOutcome) -> Result<AdaptiveOutcome, RunError> {
    if outcome.complete {
        Ok(outcome)
    } else {
        Err(RunError::IterationBudget(Box::new(outcome)))
    }
}

/// Recomputes the visited levels from the traces alone. Returns `None` when
/// a recorded decision disagrees with the one the estimator would make.
pub fn replay_schedule(
    traces: &[TraceRecord],
    criteria: &PerformanceCriteria,
    params: &AdaptiveParams,
    cap: u32,
) -> Option<Vec<u32>> {
    let mut est = Estimator::new(params, cap);
    let mut visited = Vec::with_capacity(traces.len());
    for t in traces {
        visited.push(est.current());
        let decision = est.observe(evaluate(&t.summary, criteria).overall);
        if decision != t.decision {
            return None;
        }
    }
    Some(visited)
}

/// Brute-force oracle: the highest level in `1..=limit` that passes, assuming
/// the target degrades monotonically.
pub fn linear_sweep<L: Fn(u32) -> f64>(
    probe: &SyntheticProbe<L>,
    criteria: &PerformanceCriteria,
    requests: u32,
    limit: u32,
) -> u32 {
    (1..=limit)
        .take_while(|c| evaluate(&probe.summary(*c, requests.max(*c)), criteria).overall)
        .last()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn criteria(response_ms: f64) -> PerformanceCriteria {
        PerformanceCriteria {
            response_ms,
            tps: 1.0,
            bps: 8.0,
        }
    }

    fn run<L: Fn(u32) -> f64 + Send>(
        probe: &mut SyntheticProbe<L>,
        c: &PerformanceCriteria,
        p: &AdaptiveParams,
    ) -> AdaptiveOutcome {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(adaptive_master(probe, c, p, UNCAPPED))
            .unwrap()
    }

    #[test]
    fn linear_latency_converges_to_nine() {
        let mut probe = SyntheticProbe::new(|c| 5.0 + 10.0 * f64::from(c));
        let params = AdaptiveParams::default();
        let out = run(&mut probe, &criteria(100.0), &params);
        assert_eq!(probe.calls, vec![1, 2, 4, 8, 16, 12, 10, 9]);
        assert_eq!(out.max_sustainable_concurrency, 9);
        assert!(out.complete);
        let decisions: Vec<_> = out.traces.iter().map(|t| t.decision).collect();
        use Decision::*;
        assert_eq!(decisions, vec![Grow, Grow, Grow, Grow, Bisect, Bisect, Bisect, Stop]);
        assert_eq!(out.final_summary.unwrap().mean_ms, 95.0);
    }

    #[test]
    fn failing_start_stops_at_once() {
        let mut probe = SyntheticProbe::new(|_| 500.0);
        let out = run(&mut probe, &criteria(100.0), &AdaptiveParams::default());
        assert_eq!(out.traces.len(), 1);
        assert_eq!(out.max_sustainable_concurrency, 0);
        assert_eq!(out.final_summary, None);
        assert!(out.complete);
    }

    #[test]
    fn never_degrading_target_exhausts_budget() {
        let mut probe = SyntheticProbe::new(|_| 10.0);
        let params = AdaptiveParams {
            max_iterations: 6,
            ..AdaptiveParams::default()
        };
        let out = run(&mut probe, &criteria(100.0), &params);
        assert_eq!(out.traces.len(), 6);
        assert!(out.traces.iter().all(|t| t.decision == Decision::Grow));
        assert!(!out.complete);
        assert_eq!(out.max_sustainable_concurrency, 32);
        match ensure_complete(out).unwrap_err() {
            RunError::IterationBudget(best) => assert_eq!(best.max_sustainable_concurrency, 32),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_stops_growth_and_flags_incomplete() {
        let mut probe = SyntheticProbe::new(|_| 10.0);
        let params = AdaptiveParams::default();
        let c = criteria(100.0);
        let out = tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(adaptive_master(&mut probe, &c, &params, 100))
            .unwrap();
        assert_eq!(probe.calls, vec![1, 2, 4, 8, 16, 32, 64, 100]);
        assert_eq!(out.traces.last().unwrap().decision, Decision::Stop);
        assert_eq!(out.max_sustainable_concurrency, 100);
        assert!(!out.complete);
        assert_eq!(
            replay_schedule(&out.traces, &c, &params, 100),
            Some(probe.calls.clone())
        );
    }

    #[test]
    fn cap_below_failure_point_is_harmless() {
        let mut probe = SyntheticProbe::new(|c| 5.0 + 10.0 * f64::from(c));
        let out = run(&mut probe, &criteria(100.0), &AdaptiveParams::default());
        let mut capped = SyntheticProbe::new(|c| 5.0 + 10.0 * f64::from(c));
        let capped_out = tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(adaptive_master(&mut capped, &criteria(100.0), &AdaptiveParams::default(), 1024))
            .unwrap();
        assert_eq!(out, capped_out);
    }

    #[test]
    fn small_growth_still_moves() {
        let mut probe = SyntheticProbe::new(f64::from);
        let params = AdaptiveParams {
            growth_factor: 1.01,
            max_iterations: 5,
            ..AdaptiveParams::default()
        };
        run(&mut probe, &criteria(100.0), &params);
        assert_eq!(probe.calls, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn replay_matches_visits() {
        let mut probe = SyntheticProbe::new(|c| 5.0 + 10.0 * f64::from(c));
        let params = AdaptiveParams::default();
        let c = criteria(100.0);
        let out = run(&mut probe, &c, &params);
        assert_eq!(replay_schedule(&out.traces, &c, &params, UNCAPPED), Some(probe.calls.clone()));
        let mut tampered = out.traces.clone();
        tampered[2].decision = Decision::Stop;
        assert_eq!(replay_schedule(&tampered, &c, &params, UNCAPPED), None);
    }
}
